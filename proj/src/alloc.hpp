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

#include <mutex>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace shadowgpt {

/// The model kernels allocate many short-lived buffers of a few hundred
/// kilobytes. With glibc's default thresholds those are returned to the
/// system after every step and faulted back in on the next, which costs about
/// a third of the training time. Raising the thresholds once keeps the pages
/// resident. Results are unaffected; only allocation behavior changes.
inline void keep_heap_resident() {
#if defined(__GLIBC__)
    static std::once_flag once;
    std::call_once(once, [] {
        mallopt(M_MMAP_THRESHOLD, 32 << 20);
        mallopt(M_TRIM_THRESHOLD, 512 << 20);
        mallopt(M_TOP_PAD, 64 << 20);
    });
#endif
}

}  // namespace shadowgpt
