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

#ifndef SSDEC_CHECKPOINT_H_
#define SSDEC_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ssdec/tensor.h"

namespace ssdec {

// Binary container of named arrays. Layout (all integers little-endian):
//
//   bytes 0..3   magic "SSDC"
//   u32          format version (kCheckpointVersion)
//   u32          entry count
//   per entry, in ascending name order:
//     u32        name length, then the UTF-8 name bytes
//     u8         dtype (0 = float32, 1 = float64)
//     u8         rank
//     u64[rank]  dimensions
//     values     product(dims) IEEE-754 little-endian elements
enum class DType : std::uint8_t { kFloat32 = 0, kFloat64 = 1 };

inline constexpr std::uint32_t kCheckpointVersion = 1;

class Checkpoint {
 public:
  struct Entry {
    DType dtype = DType::kFloat32;
    Shape shape;
    // Values widened to double; narrowed again on write for float32.
    std::vector<double> values;
  };

  template <typename T>
  void Put(const std::string& name, const Tensor<T>& t);
  void PutScalar(const std::string& name, double v, DType dtype = DType::kFloat64);

  bool Contains(const std::string& name) const { return entries_.count(name) != 0; }
  const Entry& Get(const std::string& name) const;
  double GetScalar(const std::string& name) const;
  // Copies the stored values into `t`, whose shape must match.
  template <typename T>
  void CopyInto(const std::string& name, Tensor<T>& t) const;

  const std::map<std::string, Entry>& entries() const { return entries_; }

  void Write(std::ostream& out) const;
  void Save(const std::filesystem::path& path) const;
  static Checkpoint Read(std::istream& in);
  static Checkpoint Load(const std::filesystem::path& path);

 private:
  std::map<std::string, Entry> entries_;
};

}  // namespace ssdec

#endif  // SSDEC_CHECKPOINT_H_
