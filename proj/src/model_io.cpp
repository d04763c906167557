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

#include "nattr/model_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace nattr {
namespace {

using json = nlohmann::json;
using Kind = ModelFormatError::Kind;

static_assert(std::endian::native == std::endian::little,
              "model serialization assumes a little-endian host");

void put_u64(std::string& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

void put_values(std::string& out, const double* data, Index n) {
  out.append(reinterpret_cast<const char*>(data), static_cast<std::size_t>(n) * sizeof(double));
}

json tensor_entry(const std::string& name, const Shape& shape) {
  return {{"name", name}, {"shape", shape}};
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n, const std::string& what) {
    if (bytes_.size() - pos_ < n) {
      throw ModelFormatError(Kind::kTruncated, "model truncated while reading " + what + ": need " +
                                                   std::to_string(n) + " bytes, have " +
                                                   std::to_string(bytes_.size() - pos_));
    }
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  Eigen::VectorXd values(Index n, const std::string& what) {
    auto raw = take(static_cast<std::size_t>(n) * sizeof(double), what);
    Eigen::VectorXd v(n);
    std::memcpy(v.data(), raw.data(), raw.size());
    return v;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

Shape read_shape(const json& j, const std::string& where) {
  if (!j.is_array()) throw ModelFormatError(Kind::kMalformedHeader, where + ": shape is not an array");
  Shape s;
  for (const auto& e : j) {
    if (!e.is_number_integer() || e.get<std::int64_t>() <= 0) {
      throw ModelFormatError(Kind::kMalformedHeader, where + ": shape entries must be positive integers");
    }
    s.push_back(e.get<Index>());
  }
  return s;
}

// Reads the declared tensor list of a layer and checks names and ranks.
std::vector<Shape> declared_tensors(const json& layer, std::initializer_list<const char*> names,
                                    const std::string& where) {
  const auto& ts = layer.at("tensors");
  if (!ts.is_array() || ts.size() != names.size()) {
    throw ModelFormatError(Kind::kMalformedHeader, where + ": expected " + std::to_string(names.size()) +
                                                       " tensors");
  }
  std::vector<Shape> shapes;
  std::size_t i = 0;
  for (const char* name : names) {
    if (ts[i].at("name").get<std::string>() != name) {
      throw ModelFormatError(Kind::kMalformedHeader, where + ": tensor " + std::to_string(i) +
                                                         " should be '" + name + "'");
    }
    shapes.push_back(read_shape(ts[i].at("shape"), where + "." + name));
    ++i;
  }
  return shapes;
}

}  // namespace

std::string save_model(const Network& net) {
  json header;
  header["format_version"] = kModelFormatVersion;
  header["input_shape"] = net.input_shape();
  header["layers"] = json::array();
  std::string payload;
  for (const LayerSpec& layer : net.layers()) {
    json entry{{"name", layer.name}, {"kind", kind_name(layer.kind)}, {"tensors", json::array()}};
    if (const auto* d = std::get_if<Dense>(&layer.kind)) {
      entry["tensors"].push_back(tensor_entry("weight", {d->weight.rows(), d->weight.cols()}));
      entry["tensors"].push_back(tensor_entry("bias", {d->bias.size()}));
      const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w = d->weight;
      put_values(payload, w.data(), w.size());
      put_values(payload, d->bias.data(), d->bias.size());
    } else if (const auto* c = std::get_if<Conv2d>(&layer.kind)) {
      entry["stride"] = c->stride;
      entry["padding"] = c->padding;
      entry["tensors"].push_back(tensor_entry("kernels", c->kernels.shape()));
      entry["tensors"].push_back(tensor_entry("bias", {c->bias.size()}));
      put_values(payload, c->kernels.values().data(), c->kernels.size());
      put_values(payload, c->bias.data(), c->bias.size());
    } else if (const auto* p = std::get_if<MaxPool>(&layer.kind)) {
      entry["window"] = p->window;
      entry["stride"] = p->stride;
    }
    header["layers"].push_back(std::move(entry));
  }
  const std::string text = header.dump();
  std::string out(kModelMagic);
  put_u64(out, text.size());
  out += text;
  out += payload;
  return out;
}

Network load_model(std::string_view bytes) {
  Reader in(bytes);
  if (bytes.size() < kModelMagic.size() || bytes.substr(0, kModelMagic.size()) != kModelMagic) {
    throw ModelFormatError(Kind::kBadMagic, "not a model file: magic string mismatch");
  }
  in.take(kModelMagic.size(), "magic");
  std::uint64_t header_len = 0;
  std::memcpy(&header_len, in.take(8, "header length").data(), 8);
  if (header_len > in.remaining()) {
    throw ModelFormatError(Kind::kTruncated, "model truncated: header declares " + std::to_string(header_len) +
                                                 " bytes, " + std::to_string(in.remaining()) + " remain");
  }
  const auto text = in.take(static_cast<std::size_t>(header_len), "header");

  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw ModelFormatError(Kind::kMalformedHeader, std::string("model header is not valid JSON: ") + e.what());
  }

  std::vector<LayerSpec> specs;
  Shape input_shape;
  try {
    if (header.at("format_version").get<int>() != kModelFormatVersion) {
      throw ModelFormatError(Kind::kMalformedHeader,
                             "unsupported model format version " + header.at("format_version").dump());
    }
    input_shape = read_shape(header.at("input_shape"), "input_shape");
    for (const auto& layer : header.at("layers")) {
      const auto name = layer.at("name").get<std::string>();
      const auto kind = layer.at("kind").get<std::string>();
      const std::string where = "layer '" + name + "'";
      if (kind == "dense") {
        const auto shapes = declared_tensors(layer, {"weight", "bias"}, where);
        if (shapes[0].size() != 2 || shapes[1].size() != 1) {
          throw ModelFormatError(Kind::kShapeInconsistency, where + ": dense weight must be rank 2 and bias rank 1");
        }
        Dense d;
        const Eigen::VectorXd w = in.values(shape_size(shapes[0]), where + ".weight");
        d.weight = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            w.data(), shapes[0][0], shapes[0][1]);
        d.bias = in.values(shapes[1][0], where + ".bias");
        specs.push_back({name, std::move(d)});
      } else if (kind == "conv2d") {
        const auto shapes = declared_tensors(layer, {"kernels", "bias"}, where);
        if (shapes[0].size() != 4 || shapes[1].size() != 1) {
          throw ModelFormatError(Kind::kShapeInconsistency, where + ": conv kernels must be rank 4 and bias rank 1");
        }
        Conv2d c;
        c.stride = layer.at("stride").get<Index>();
        c.padding = layer.at("padding").get<Index>();
        c.kernels = Tensor(shapes[0], in.values(shape_size(shapes[0]), where + ".kernels"));
        c.bias = in.values(shapes[1][0], where + ".bias");
        specs.push_back({name, std::move(c)});
      } else if (kind == "relu") {
        specs.push_back({name, Relu{}});
      } else if (kind == "maxpool") {
        specs.push_back({name, MaxPool{layer.at("window").get<Index>(), layer.at("stride").get<Index>()}});
      } else if (kind == "flatten") {
        specs.push_back({name, Flatten{}});
      } else {
        throw ModelFormatError(Kind::kMalformedHeader, where + ": unknown layer kind '" + kind + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ModelFormatError(Kind::kMalformedHeader, std::string("model header missing or mistyped field: ") + e.what());
  }
  if (in.remaining() != 0) {
    throw ModelFormatError(Kind::kTrailingData,
                           "model has " + std::to_string(in.remaining()) + " unexpected trailing bytes");
  }
  try {
    return Network(input_shape, std::move(specs));
  } catch (const std::invalid_argument& e) {
    throw ModelFormatError(Kind::kShapeInconsistency, std::string("inconsistent model shapes: ") + e.what());
  }
}

void save_model_file(const Network& net, const std::filesystem::path& path) {
  const std::string bytes = save_model(net);
  // Written beside the target and renamed so a failure never leaves a partial model.
  std::filesystem::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ModelIoError("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw ModelIoError("failed writing '" + path.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw ModelIoError("cannot move model into place at '" + path.string() + "'");
  }
}

Network load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelIoError("cannot open model file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_model(buf.str());
}

}  // namespace nattr
