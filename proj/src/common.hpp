// Copyright 2026 The ShadowGPT Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace shadowgpt {

/// Error categories. The numeric values double as CLI exit codes.
enum class ErrorKind : int {
    Config = 2,
    Numeric = 3,
    Io = 4,
};

class Error : public std::runtime_error {
   public:
    Error(ErrorKind kind, const std::string &message) : std::runtime_error(message), kind_(kind) {
    }
    ErrorKind kind() const noexcept {
        return kind_;
    }

   private:
    ErrorKind kind_;
};

/// Invalid parameters or configuration: the message names the violated constraint.
struct ParameterError : Error {
    explicit ParameterError(const std::string &message) : Error(ErrorKind::Config, message) {
    }
};

struct NumericError : Error {
    explicit NumericError(const std::string &message) : Error(ErrorKind::Numeric, message) {
    }
};

struct IoError : Error {
    explicit IoError(const std::string &message) : Error(ErrorKind::Io, message) {
    }
};

}  // namespace shadowgpt
