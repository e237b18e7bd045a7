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

#include "ssdec/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "ssdec/error.h"

namespace ssdec {
namespace {

constexpr char kMagic[4] = {'S', 'S', 'D', 'C'};

template <typename U>
void WriteLe(std::ostream& out, U v) {
  unsigned char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  }
  out.write(reinterpret_cast<const char*>(buf), sizeof(U));
}

template <typename U>
U ReadLe(std::istream& in) {
  unsigned char buf[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(U))) {
    throw DataError("checkpoint truncated");
  }
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

template <typename T>
void Checkpoint::Put(const std::string& name, const Tensor<T>& t) {
  Entry e;
  e.dtype = sizeof(T) == 4 ? DType::kFloat32 : DType::kFloat64;
  e.shape = t.shape();
  e.values.assign(t.values().begin(), t.values().end());
  entries_[name] = std::move(e);
}

void Checkpoint::PutScalar(const std::string& name, double v, DType dtype) {
  Entry e;
  e.dtype = dtype;
  e.values = {v};
  entries_[name] = std::move(e);
}

const Checkpoint::Entry& Checkpoint::Get(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw DataError("checkpoint has no entry '" + name + "'");
  return it->second;
}

double Checkpoint::GetScalar(const std::string& name) const {
  const Entry& e = Get(name);
  if (e.values.size() != 1) throw DataError("checkpoint entry '" + name + "' is not a scalar");
  return e.values[0];
}

template <typename T>
void Checkpoint::CopyInto(const std::string& name, Tensor<T>& t) const {
  const Entry& e = Get(name);
  if (e.shape != t.shape()) {
    throw ShapeError("checkpoint entry '" + name + "' has shape " + ShapeToString(e.shape) +
                     ", expected " + ShapeToString(t.shape()));
  }
  auto dst = t.values();
  for (std::size_t i = 0; i < e.values.size(); ++i) dst[i] = static_cast<T>(e.values[i]);
}

void Checkpoint::Write(std::ostream& out) const {
  out.write(kMagic, 4);
  WriteLe<std::uint32_t>(out, kCheckpointVersion);
  WriteLe<std::uint32_t>(out, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& [name, e] : entries_) {
    WriteLe<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    out.put(static_cast<char>(e.dtype));
    out.put(static_cast<char>(e.shape.size()));
    for (auto d : e.shape) WriteLe<std::uint64_t>(out, static_cast<std::uint64_t>(d));
    for (double v : e.values) {
      if (e.dtype == DType::kFloat32) {
        WriteLe<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
      } else {
        WriteLe<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
      }
    }
  }
  if (!out) throw DataError("failed writing checkpoint");
}

void Checkpoint::Save(const std::filesystem::path& path) const {
  // Write to a sibling file first so a crash never leaves a torn checkpoint.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    Write(out);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint Checkpoint::Read(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError("not a checkpoint file (bad magic)");
  }
  const auto version = ReadLe<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = ReadLe<std::uint32_t>(in);
  Checkpoint ckpt;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = ReadLe<std::uint32_t>(in);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw DataError("checkpoint truncated");
    Entry e;
    const int dtype = in.get();
    const int rank = in.get();
    if (!in || (dtype != 0 && dtype != 1)) throw DataError("corrupt checkpoint entry " + name);
    e.dtype = static_cast<DType>(dtype);
    for (int r = 0; r < rank; ++r) {
      e.shape.push_back(static_cast<std::int64_t>(ReadLe<std::uint64_t>(in)));
    }
    const auto n = static_cast<std::size_t>(NumElements(e.shape));
    e.values.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      if (e.dtype == DType::kFloat32) {
        e.values[j] = std::bit_cast<float>(ReadLe<std::uint32_t>(in));
      } else {
        e.values[j] = std::bit_cast<double>(ReadLe<std::uint64_t>(in));
      }
    }
    ckpt.entries_[name] = std::move(e);
  }
  return ckpt;
}

Checkpoint Checkpoint::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  return Read(in);
}

template void Checkpoint::Put<float>(const std::string&, const Tensor<float>&);
template void Checkpoint::Put<double>(const std::string&, const Tensor<double>&);
template void Checkpoint::CopyInto<float>(const std::string&, Tensor<float>&) const;
template void Checkpoint::CopyInto<double>(const std::string&, Tensor<double>&) const;

}  // namespace ssdec
