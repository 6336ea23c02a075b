#pragma once

#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

#include "ebme/model.hpp"

namespace ebme {

using json = nlohmann::json;

// Checkpoint layout: 8-byte magic, uint64 header length, JSON header, then a
// contiguous little-endian float32 blob. The header carries model metadata and
// a tensor directory (name -> shape + blob offset in floats).
inline constexpr char kCheckpointMagic[8] = {'E', 'B', 'M', 'E', 'C', 'K', 'P', '1'};

inline json estimator_config_to_json(const EstimatorConfig& c) {
  return {{"levels_train", c.levels_train},
          {"encoder_stages", c.encoder_stages},
          {"base_width", c.base_width},
          {"corr_radius", c.corr_radius},
          {"use_correlation", c.use_correlation},
          {"corr_gain", c.corr_gain},
          {"warp_mode", warp_mode_name(c.warp_mode)},
          {"head_widths", c.head_widths}};
}

inline EstimatorConfig estimator_config_from_json(const json& j) {
  EstimatorConfig c;
  c.levels_train = j.value("levels_train", c.levels_train);
  c.encoder_stages = j.value("encoder_stages", c.encoder_stages);
  c.base_width = j.value("base_width", c.base_width);
  c.corr_radius = j.value("corr_radius", c.corr_radius);
  c.use_correlation = j.value("use_correlation", c.use_correlation);
  c.corr_gain = j.value("corr_gain", c.corr_gain);
  if (j.contains("warp_mode")) c.warp_mode = warp_mode_from_name(j["warp_mode"]);
  if (j.contains("head_widths")) c.head_widths = j["head_widths"].get<std::vector<int>>();
  return c;
}

inline json model_config_to_json(const ModelConfig& c) {
  return {{"format_version", 1},
          {"estimator", estimator_config_to_json(c.estimator)},
          {"synthesis",
           {{"ctx_widths", c.synthesis.ctx_widths}, {"enc_widths", c.synthesis.enc_widths}}},
          {"train_crop", c.train_crop}};
}

inline ModelConfig model_config_from_json(const json& j) {
  if (j.value("format_version", 1) != 1) throw InputError("checkpoint: unsupported format version");
  ModelConfig c;
  if (j.contains("estimator")) c.estimator = estimator_config_from_json(j["estimator"]);
  if (j.contains("synthesis")) {
    const auto& s = j["synthesis"];
    if (s.contains("ctx_widths")) c.synthesis.ctx_widths = s["ctx_widths"].get<std::vector<int>>();
    if (s.contains("enc_widths")) c.synthesis.enc_widths = s["enc_widths"].get<std::vector<int>>();
  }
  c.train_crop = j.value("train_crop", c.train_crop);
  return c;
}

// Extra named float arrays (e.g. optimizer state) ride along with the model
// parameters so training can resume exactly.
template <typename T>
void save_checkpoint(const std::string& path, const ModelConfig& cfg,
                     const ParamMap<T>& params, long iteration,
                     const std::map<std::string, Tensor<T>>& extra = {}) {
  json header;
  header["model"] = model_config_to_json(cfg);
  header["iteration"] = iteration;
  json dir = json::object();
  uint64_t offset = 0;
  auto add_entry = [&](const std::string& name, const Tensor<T>& t) {
    dir[name] = {{"shape", {t.n, t.h, t.w, t.c}}, {"offset", offset}};
    offset += static_cast<uint64_t>(t.size());
  };
  for (const auto& [name, var] : params) add_entry(name, var->value);
  for (const auto& [name, t] : extra) add_entry("extra." + name, t);
  header["tensors"] = dir;
  const std::string hs = header.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("checkpoint: cannot open for writing: " + path);
  f.write(kCheckpointMagic, 8);
  uint64_t hlen = hs.size();
  f.write(reinterpret_cast<const char*>(&hlen), 8);
  f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  auto write_blob = [&](const Tensor<T>& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      float v = static_cast<float>(t.data[i]);
      f.write(reinterpret_cast<const char*>(&v), 4);
    }
  };
  for (const auto& [name, var] : params) write_blob(var->value);
  for (const auto& [name, t] : extra) write_blob(t);
  if (!f) throw InputError("checkpoint: write failed: " + path);
}

template <typename T>
struct LoadedCheckpoint {
  ModelConfig config;
  long iteration = 0;
  std::map<std::string, Tensor<T>> tensors;  // model params and "extra.*" state
};

template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("checkpoint: cannot open: " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw InputError("checkpoint: bad magic in " + path);
  }
  uint64_t hlen = 0;
  f.read(reinterpret_cast<char*>(&hlen), 8);
  std::string hs(hlen, '\0');
  f.read(hs.data(), static_cast<std::streamsize>(hlen));
  if (!f) throw InputError("checkpoint: truncated header in " + path);
  json header = json::parse(hs, nullptr, false);
  if (header.is_discarded()) throw InputError("checkpoint: corrupt header in " + path);

  LoadedCheckpoint<T> out;
  out.config = model_config_from_json(header.at("model"));
  out.iteration = header.value("iteration", 0L);
  const std::streampos blob_start = f.tellg();
  for (const auto& [name, entry] : header.at("tensors").items()) {
    auto shape = entry.at("shape").template get<std::array<int, 4>>();
    uint64_t offset = entry.at("offset").template get<uint64_t>();
    Tensor<T> t(shape[0], shape[1], shape[2], shape[3]);
    f.seekg(blob_start + static_cast<std::streamoff>(offset * 4));
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      float v;
      f.read(reinterpret_cast<char*>(&v), 4);
      t.data[i] = static_cast<T>(v);
    }
    if (!f) throw InputError("checkpoint: truncated tensor '" + name + "' in " + path);
    out.tensors[name] = std::move(t);
  }
  return out;
}

// Rebuilds the model described by a checkpoint and installs its parameters.
template <typename T>
EbmeModel<T> model_from_checkpoint(const LoadedCheckpoint<T>& ckpt) {
  EbmeModel<T> model(ckpt.config, 0);
  auto params = model.params(true);
  for (auto& [name, var] : params) {
    auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end()) throw InputError("checkpoint: missing tensor " + name);
    if (!var->value.same_shape(it->second)) {
      throw InputError("checkpoint: shape mismatch for " + name + ": expected " +
                       var->value.shape_str() + ", got " + it->second.shape_str());
    }
    var->value = it->second;
  }
  return model;
}

}  // namespace ebme
