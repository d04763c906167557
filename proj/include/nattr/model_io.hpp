// Copyright 2026 The nattr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NATTR_MODEL_IO_HPP
#define NATTR_MODEL_IO_HPP

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "nattr/network.hpp"

namespace nattr {

// Model file layout:
//   "NATTR1\0"                      7 bytes of magic
//   u64 little-endian               byte length of the JSON header
//   JSON header (UTF-8)             format_version, input_shape, layers[]
//   f64 little-endian values        every weight tensor, in header order
// Each layer entry lists its tensors as {"name", "shape"}; dense layers carry
// "weight" [out,in] and "bias" [out], conv2d layers "kernels"
// [out_ch,in_ch,kh,kw] and "bias" [out_ch]. Values are stored row-major.

inline constexpr std::string_view kModelMagic{"NATTR1\0", 7};
inline constexpr int kModelFormatVersion = 1;

class ModelFormatError : public std::runtime_error {
 public:
  enum class Kind { kBadMagic, kMalformedHeader, kShapeInconsistency, kTruncated, kTrailingData };

  ModelFormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// The model file could not be opened, read or written.
class ModelIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string save_model(const Network& net);
Network load_model(std::string_view bytes);

void save_model_file(const Network& net, const std::filesystem::path& path);
Network load_model_file(const std::filesystem::path& path);

}  // namespace nattr

#endif  // NATTR_MODEL_IO_HPP
