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

// Little-endian byte packing for the on-disk formats, independent of host order.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>

#include "common.hpp"

namespace shadowgpt::binio {

class Writer {
   public:
    void u8(uint8_t v) {
        buf_.push_back(static_cast<char>(v));
    }
    void u16(uint16_t v) {
        put_le(v, 2);
    }
    void u32(uint32_t v) {
        put_le(v, 4);
    }
    void i32(int32_t v) {
        put_le(static_cast<uint32_t>(v), 4);
    }
    void u64(uint64_t v) {
        put_le(v, 8);
    }
    void f64(double v) {
        put_le(std::bit_cast<uint64_t>(v), 8);
    }
    void bytes(std::string_view s) {
        buf_.append(s);
    }
    /// Fixed-width field, NUL padded.
    void fixed(std::string_view s, size_t width) {
        std::string field(width, '\0');
        std::memcpy(field.data(), s.data(), std::min(width, s.size()));
        buf_.append(field);
    }
    const std::string &data() const {
        return buf_;
    }

   private:
    void put_le(uint64_t v, int n) {
        for (int k = 0; k < n; k++) {
            buf_.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
        }
    }
    std::string buf_;
};

class Reader {
   public:
    Reader(std::string_view data, std::string what) : data_(data), what_(std::move(what)) {
    }
    uint8_t u8() {
        need(1);
        return static_cast<uint8_t>(data_[pos_++]);
    }
    uint16_t u16() {
        return static_cast<uint16_t>(get_le(2));
    }
    uint32_t u32() {
        return static_cast<uint32_t>(get_le(4));
    }
    int32_t i32() {
        return static_cast<int32_t>(static_cast<uint32_t>(get_le(4)));
    }
    uint64_t u64() {
        return get_le(8);
    }
    double f64() {
        return std::bit_cast<double>(get_le(8));
    }
    std::string_view bytes(size_t n) {
        need(n);
        std::string_view out = data_.substr(pos_, n);
        pos_ += n;
        return out;
    }
    std::string fixed(size_t width) {
        std::string_view raw = bytes(width);
        return std::string(raw.substr(0, raw.find('\0')));
    }
    size_t remaining() const {
        return data_.size() - pos_;
    }
    size_t position() const {
        return pos_;
    }

   private:
    void need(size_t n) {
        if (data_.size() - pos_ < n) {
            throw IoError(what_ + ": truncated file");
        }
    }
    uint64_t get_le(int n) {
        need(n);
        uint64_t v = 0;
        for (int k = 0; k < n; k++) {
            v |= static_cast<uint64_t>(static_cast<uint8_t>(data_[pos_ + k])) << (8 * k);
        }
        pos_ += n;
        return v;
    }
    std::string_view data_;
    size_t pos_ = 0;
    std::string what_;
};

std::string read_file(const std::filesystem::path &path);
void write_file(const std::filesystem::path &path, std::string_view contents);
uint32_t crc32(std::string_view data);
std::string crc32_hex(std::string_view data);

}  // namespace shadowgpt::binio
