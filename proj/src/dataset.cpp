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

#include "nattr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nattr/random.hpp"

namespace nattr {
namespace {

using Kind = IdxFormatError::Kind;

std::string hex32(std::uint32_t v) {
  std::ostringstream os;
  os << "0x" << std::hex;
  os.width(8);
  os.fill('0');
  os << v;
  return os.str();
}

std::uint32_t read_be32(std::string_view bytes, std::size_t offset, const char* file) {
  if (bytes.size() < offset + 4) {
    throw IdxFormatError(Kind::kTruncated, std::string(file) + " file truncated inside header");
  }
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    v = (v << 8) | static_cast<unsigned char>(bytes[offset + i]);
  }
  return v;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxFormatError(Kind::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

LabeledDataset LabeledDataset::head(Index count) const { return slice(0, std::min(count, size())); }

LabeledDataset LabeledDataset::slice(Index begin, Index count) const {
  if (begin < 0 || count < 0 || begin + count > size()) {
    throw std::out_of_range("dataset slice [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                            ") outside " + std::to_string(size()) + " examples");
  }
  LabeledDataset out;
  out.sample_shape = sample_shape;
  out.samples.assign(samples.begin() + begin, samples.begin() + begin + count);
  out.labels.assign(labels.begin() + begin, labels.begin() + begin + count);
  return out;
}

LabeledDataset parse_idx(std::string_view image_bytes, std::string_view label_bytes) {
  const std::uint32_t image_magic = read_be32(image_bytes, 0, "image");
  if (image_magic != kIdxImageMagic) {
    throw IdxFormatError(Kind::kBadMagic, "image file magic " + hex32(image_magic) + ", expected " +
                                              hex32(kIdxImageMagic));
  }
  const std::uint32_t label_magic = read_be32(label_bytes, 0, "label");
  if (label_magic != kIdxLabelMagic) {
    throw IdxFormatError(Kind::kBadMagic, "label file magic " + hex32(label_magic) + ", expected " +
                                              hex32(kIdxLabelMagic));
  }
  const std::uint32_t count = read_be32(image_bytes, 4, "image");
  const std::uint32_t rows = read_be32(image_bytes, 8, "image");
  const std::uint32_t cols = read_be32(image_bytes, 12, "image");
  const std::uint32_t label_count = read_be32(label_bytes, 4, "label");
  if (rows == 0 || cols == 0) {
    throw IdxFormatError(Kind::kBadDimensions, "image dimensions " + std::to_string(rows) + "x" +
                                                   std::to_string(cols) + " must be positive");
  }
  if (count != label_count) {
    throw IdxFormatError(Kind::kCountMismatch, "image file holds " + std::to_string(count) +
                                                   " images but label file holds " + std::to_string(label_count) +
                                                   " labels");
  }
  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  const std::size_t image_need = 16 + pixels * count;
  const std::size_t label_need = 8 + static_cast<std::size_t>(count);
  if (image_bytes.size() != image_need) {
    throw IdxFormatError(Kind::kTruncated, "image file has " + std::to_string(image_bytes.size()) +
                                               " bytes, header implies " + std::to_string(image_need));
  }
  if (label_bytes.size() != label_need) {
    throw IdxFormatError(Kind::kTruncated, "label file has " + std::to_string(label_bytes.size()) +
                                               " bytes, header implies " + std::to_string(label_need));
  }

  LabeledDataset ds;
  ds.sample_shape = {static_cast<Index>(rows), static_cast<Index>(cols), 1};
  ds.samples.reserve(count);
  ds.labels.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    Tensor img(ds.sample_shape);
    const auto* px = reinterpret_cast<const unsigned char*>(image_bytes.data() + 16 + n * pixels);
    for (std::size_t i = 0; i < pixels; ++i) img[static_cast<Index>(i)] = px[i] / 255.0;
    const int label = static_cast<unsigned char>(label_bytes[8 + n]);
    if (label > 9) {
      throw IdxFormatError(Kind::kBadLabel, "label " + std::to_string(label) + " at index " + std::to_string(n) +
                                                " is not a digit class");
    }
    ds.samples.push_back(std::move(img));
    ds.labels.push_back(label);
  }
  return ds;
}

LabeledDataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  return parse_idx(slurp(images_path), slurp(labels_path));
}

LabeledDataset synth_blobs(std::uint64_t seed, Index count, Index dims) {
  if (count < 0 || count % 2 != 0) throw std::invalid_argument("synth_blobs: count must be even");
  if (dims <= 0) throw std::invalid_argument("synth_blobs: dims must be positive");
  Rng rng(seed);
  LabeledDataset ds;
  ds.sample_shape = {dims};
  const double offset = 2.0 / std::sqrt(static_cast<double>(dims));
  for (Index n = 0; n < count; ++n) {
    const int label = static_cast<int>(n % 2);
    Tensor x(ds.sample_shape);
    for (Index d = 0; d < dims; ++d) x[d] = (label == 0 ? -offset : offset) + 0.5 * rng.normal();
    ds.samples.push_back(std::move(x));
    ds.labels.push_back(label);
  }
  return ds;
}

}  // namespace nattr
