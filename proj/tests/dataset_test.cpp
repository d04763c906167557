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

#include <gtest/gtest.h>

#include "nattr/dataset.hpp"
#include "test_util.hpp"

namespace nattr {
namespace {

using Kind = IdxFormatError::Kind;

const std::filesystem::path kFixtures = NATTR_FIXTURE_DIR;

std::string images() { return testing::read_file(kFixtures / "two-images-idx3-ubyte"); }
std::string labels() { return testing::read_file(kFixtures / "two-labels-idx1-ubyte"); }

void put_u32(std::string& bytes, std::size_t at, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) bytes[at + static_cast<std::size_t>(k)] = static_cast<char>((v >> (24 - 8 * k)) & 0xff);
}

Kind parse_error(const std::string& img, const std::string& lab) {
  try {
    parse_idx(img, lab);
  } catch (const IdxFormatError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "parse_idx accepted malformed input";
  return Kind::kIo;
}

TEST(Idx, FixtureMatchesOracle) {
  const auto& o = testing::oracles()["idx"];
  const LabeledDataset ds = load_idx(kFixtures / "two-images-idx3-ubyte", kFixtures / "two-labels-idx1-ubyte");
  ASSERT_EQ(ds.size(), 2);
  EXPECT_EQ(ds.sample_shape, (Shape{2, 3, 1}));
  EXPECT_EQ(ds.labels, o["labels"].get<std::vector<int>>());
  for (Index n = 0; n < 2; ++n) {
    EXPECT_EQ(ds.samples[static_cast<std::size_t>(n)].values(), testing::vec(o["pixels"][static_cast<std::size_t>(n)]));
  }
}

TEST(Idx, LabelFileGivenAsImages) {
  EXPECT_EQ(parse_error(labels(), labels()), Kind::kBadMagic);
  EXPECT_EQ(parse_error(images(), images()), Kind::kBadMagic);
}

TEST(Idx, CountMismatch) {
  std::string img = images();
  put_u32(img, 4, 3);
  img += std::string(6, '\0');
  EXPECT_EQ(parse_error(img, labels()), Kind::kCountMismatch);
}

TEST(Idx, Truncated) {
  const std::string img = images();
  EXPECT_EQ(parse_error(img.substr(0, img.size() - 1), labels()), Kind::kTruncated);
  EXPECT_EQ(parse_error(img.substr(0, 9), labels()), Kind::kTruncated);
  EXPECT_EQ(parse_error(img, labels().substr(0, 9)), Kind::kTruncated);
  EXPECT_EQ(parse_error(img + "x", labels()), Kind::kTruncated);
}

TEST(Idx, LabelOutOfRange) {
  std::string lab = labels();
  lab[8] = 10;
  EXPECT_EQ(parse_error(images(), lab), Kind::kBadLabel);
}

TEST(Idx, MissingFile) {
  try {
    load_idx(kFixtures / "missing", kFixtures / "two-labels-idx1-ubyte");
    FAIL();
  } catch (const IdxFormatError& e) {
    EXPECT_EQ(e.kind(), Kind::kIo);
  }
}

TEST(Idx, FuzzedHeadersAreRejectedCleanly) {
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    std::string img = images();
    std::string lab = labels();
    std::string& victim = rng.index(2) ? img : lab;
    victim[rng.index(victim.size())] = static_cast<char>(rng.index(256));
    if (rng.index(4) == 0) victim.resize(rng.index(victim.size() + 1));
    try {
      const auto ds = parse_idx(img, lab);
      EXPECT_EQ(ds.size(), static_cast<Index>(ds.labels.size()));
    } catch (const IdxFormatError&) {
    }
  }
}

TEST(Dataset, HeadAndSlice) {
  const LabeledDataset ds = synth_blobs(1, 10, 3);
  EXPECT_EQ(ds.head(4).size(), 4);
  EXPECT_EQ(ds.head(100).size(), 10);
  const auto s = ds.slice(6, 3);
  ASSERT_EQ(s.size(), 3);
  EXPECT_EQ(s.samples[0], ds.samples[6]);
  EXPECT_EQ(s.labels[2], ds.labels[8]);
}

TEST(Blobs, DeterministicAndBalanced) {
  const auto a = synth_blobs(9, 40, 4);
  const auto b = synth_blobs(9, 40, 4);
  ASSERT_EQ(a.size(), 40);
  for (Index i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.samples[static_cast<std::size_t>(i)], b.samples[static_cast<std::size_t>(i)]);
    EXPECT_EQ(a.labels[static_cast<std::size_t>(i)], i % 2);
  }
  EXPECT_NE(synth_blobs(10, 40, 4).samples[0], a.samples[0]);
  EXPECT_TRUE(synth_blobs(1, 0, 4).empty());
  EXPECT_THROW(synth_blobs(1, 3, 4), std::invalid_argument);
  EXPECT_THROW(synth_blobs(1, 4, 0), std::invalid_argument);
}

TEST(Blobs, LinearlySeparable) {
  // With equal isotropic covariance the Bayes rule is the sign of the
  // coordinate sum; the class means are 4 sigma apart along it.
  const auto ds = synth_blobs(3, 1000, 8);
  Index correct = 0;
  for (Index i = 0; i < ds.size(); ++i) {
    const int predicted = sum(ds.samples[static_cast<std::size_t>(i)]) > 0 ? 1 : 0;
    correct += predicted == ds.labels[static_cast<std::size_t>(i)];
  }
  EXPECT_GE(static_cast<double>(correct) / static_cast<double>(ds.size()), 0.99);
}

}  // namespace
}  // namespace nattr
