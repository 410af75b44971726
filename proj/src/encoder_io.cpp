// Copyright (c) 2026 The intq Authors. All Rights Reserved.
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

#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "intq/encoder.hpp"
#include "json.hpp"

namespace intq {
namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;
constexpr std::size_t kAlignment = 64;

json qparams_to_json(const QParams& p) {
  return {{"bits", p.bits()}, {"alpha", p.alpha()}, {"scale", p.scale()}};
}

QParams qparams_from_json(const json& j) {
  const int bits = j.at("bits").get<int>();
  const double alpha = j.at("alpha").get<double>();
  const double scale = j.at("scale").get<double>();
  auto p = QParams::from_alpha(bits, alpha);
  if (p.scale() != scale) p = QParams::from_scale(bits, scale);
  if (p.alpha() != alpha || p.scale() != scale) {
    throw InvalidData("weight manifest: inconsistent alpha/scale pair");
  }
  return p;
}

class BlobWriter {
 public:
  json put(const std::vector<int32_t>& values, int bytes_per_value) {
    while (blob_.size() % kAlignment) blob_.push_back(0);
    const std::size_t offset = blob_.size();
    for (int32_t v : values) {
      const auto u = static_cast<uint32_t>(v);
      for (int b = 0; b < bytes_per_value; ++b) blob_.push_back(static_cast<char>((u >> (8 * b)) & 0xff));
    }
    return {{"offset", offset}, {"count", values.size()}, {"dtype", bytes_per_value == 1 ? "i8" : "i32"}};
  }
  const std::string& blob() const { return blob_; }

 private:
  std::string blob_;
};

std::vector<int32_t> get(const std::string& blob, const json& j) {
  const auto offset = j.at("offset").get<std::size_t>();
  const auto count = j.at("count").get<std::size_t>();
  const auto dtype = j.at("dtype").get<std::string>();
  if (dtype != "i8" && dtype != "i32") throw InvalidData("weight manifest: unknown dtype " + dtype);
  if (offset % kAlignment) throw InvalidData("weight manifest: misaligned tensor");
  const std::size_t width = dtype == "i8" ? 1 : 4;
  if (offset > blob.size() || count > (blob.size() - offset) / width) {
    throw InvalidData("weight blob is truncated");
  }
  std::vector<int32_t> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    uint32_t u = 0;
    for (std::size_t b = 0; b < width; ++b) {
      u |= static_cast<uint32_t>(static_cast<unsigned char>(blob[offset + i * width + b])) << (8 * b);
    }
    out[i] = width == 1 ? static_cast<int8_t>(u & 0xff) : static_cast<int32_t>(u);
  }
  return out;
}

std::filesystem::path blob_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".bin";
  return p;
}

#define INTQ_ACT_FIELDS(X)                                                                   \
  X(input) X(query) X(key) X(value) X(probs) X(context) X(attn_out) X(res1) X(ln1_out) X(ffn1) \
      X(gelu_out) X(ffn2) X(res2) X(output)

}  // namespace

void save_weights(const std::filesystem::path& path, const std::vector<EncoderWeights>& layers) {
  BlobWriter w;
  json manifest;
  manifest["format"] = "intq-encoder";
  manifest["version"] = kFormatVersion;
  manifest["blob"] = blob_path(path).filename().string();
  json jl = json::array();
  for (const auto& l : layers) {
    json j;
    j["dims"] = l.dims.to_string();
    auto tensor = [&](const QTensor& t) {
      json e = w.put(t.data(), 1);
      e["shape"] = t.shape();
      e["qparams"] = qparams_to_json(t.params());
      return e;
    };
    j["wq"] = tensor(l.wq);
    j["wk"] = tensor(l.wk);
    j["wv"] = tensor(l.wv);
    j["wo"] = tensor(l.wo);
    j["w1"] = tensor(l.w1);
    j["w2"] = tensor(l.w2);
    j["bq"] = w.put(l.bq, 4);
    j["bk"] = w.put(l.bk, 4);
    j["bv"] = w.put(l.bv, 4);
    j["bo"] = w.put(l.bo, 4);
    j["b1"] = w.put(l.b1, 4);
    j["b2"] = w.put(l.b2, 4);
    auto ln = [&](const LayerNormParams& p) {
      return json{{"channels", p.channels},     {"frac_bits", p.frac_bits},
                  {"eps", p.eps},               {"gain_scale", p.gain_scale},
                  {"gain", w.put(p.gain, 4)},   {"bias", w.put(p.bias, 4)}};
    };
    j["ln1"] = ln(l.ln1);
    j["ln2"] = ln(l.ln2);
    json act;
#define INTQ_SAVE(name) act[#name] = qparams_to_json(l.act.name);
    INTQ_ACT_FIELDS(INTQ_SAVE)
#undef INTQ_SAVE
    j["act"] = act;
    jl.push_back(std::move(j));
  }
  manifest["layers"] = std::move(jl);

  std::ofstream bin(blob_path(path), std::ios::binary);
  if (!bin) throw IoError("cannot write " + blob_path(path).string());
  bin.write(w.blob().data(), static_cast<std::streamsize>(w.blob().size()));
  std::ofstream js(path);
  if (!js) throw IoError("cannot write " + path.string());
  js << manifest.dump(2) << '\n';
  if (!bin || !js) throw IoError("write failed for " + path.string());
}

std::vector<EncoderWeights> load_weights(const std::filesystem::path& path) {
  std::ifstream js(path);
  if (!js) throw IoError("cannot read " + path.string());
  std::ifstream bin(blob_path(path), std::ios::binary);
  if (!bin) throw IoError("cannot read " + blob_path(path).string());
  const std::string blob((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());

  std::vector<EncoderWeights> layers;
  try {
    const json manifest = json::parse(js);
    if (manifest.at("format") != "intq-encoder" || manifest.at("version") != kFormatVersion) {
      throw InvalidData("unsupported weight file " + path.string());
    }
    for (const auto& j : manifest.at("layers")) {
      auto tensor = [&](const char* key) {
        const auto& e = j.at(key);
        return QTensor(get(blob, e), qparams_from_json(e.at("qparams")),
                       e.at("shape").get<std::vector<std::size_t>>());
      };
      auto ln = [&](const char* key) {
        const auto& e = j.at(key);
        LayerNormParams p;
        p.channels = e.at("channels").get<std::size_t>();
        p.frac_bits = e.at("frac_bits").get<int>();
        p.eps = e.at("eps").get<int32_t>();
        p.gain_scale = e.at("gain_scale").get<double>();
        p.gain = get(blob, e.at("gain"));
        p.bias = get(blob, e.at("bias"));
        return p;
      };
      ActivationScales a;
      const auto& act = j.at("act");
#define INTQ_LOAD(name) a.name = qparams_from_json(act.at(#name));
      INTQ_ACT_FIELDS(INTQ_LOAD)
#undef INTQ_LOAD
      EncoderWeights l{EncoderDims::parse(j.at("dims").get<std::string>()),
                       tensor("wq"),
                       tensor("wk"),
                       tensor("wv"),
                       tensor("wo"),
                       tensor("w1"),
                       tensor("w2"),
                       get(blob, j.at("bq")),
                       get(blob, j.at("bk")),
                       get(blob, j.at("bv")),
                       get(blob, j.at("bo")),
                       get(blob, j.at("b1")),
                       get(blob, j.at("b2")),
                       ln("ln1"),
                       ln("ln2"),
                       a};
      layers.push_back(std::move(l));
    }
  } catch (const json::exception& e) {
    throw InvalidData("malformed weight manifest " + path.string() + ": " + e.what());
  }
  if (layers.empty()) throw InvalidData("weight file " + path.string() + " has no layers");
  return layers;
}

}  // namespace intq
