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

#ifndef NATTR_DATASET_HPP
#define NATTR_DATASET_HPP

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nattr/tensor.hpp"

namespace nattr {

/// Equally shaped samples with one class label each.
struct LabeledDataset {
  Shape sample_shape;
  std::vector<Tensor> samples;
  std::vector<int> labels;

  Index size() const { return static_cast<Index>(samples.size()); }
  bool empty() const { return samples.empty(); }

  /// First `count` examples (or all of them if fewer).
  LabeledDataset head(Index count) const;
  /// Examples [begin, begin + count).
  LabeledDataset slice(Index begin, Index count) const;
};

class IdxFormatError : public std::runtime_error {
 public:
  enum class Kind { kBadMagic, kCountMismatch, kTruncated, kBadDimensions, kBadLabel, kIo };

  IdxFormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Parses a big-endian IDX image/label pair. Pixels are scaled by 1/255 and
/// samples get shape rows x cols x 1.
LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path);

/// Same as load_idx but from in-memory file contents.
LabeledDataset parse_idx(std::string_view image_bytes, std::string_view label_bytes);

/// Two Gaussian blobs with means +-2 * (1,...,1)/sqrt(dims) and sigma 0.5.
/// Even indices are class 0, odd indices class 1.
LabeledDataset synth_blobs(std::uint64_t seed, Index count, Index dims);

}  // namespace nattr

#endif  // NATTR_DATASET_HPP
