// Copyright 2026 The ssdec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SSDEC_RUNTIME_H_
#define SSDEC_RUNTIME_H_

namespace ssdec {

// Keeps freed tensor buffers in the heap instead of returning them to the
// OS, so repeated training steps reuse warm pages. Call once at startup,
// before heavy allocation. A no-op outside glibc.
void ConfigureAllocator();

}  // namespace ssdec

#endif  // SSDEC_RUNTIME_H_
