// SPDX-License-Identifier: Apache-2.0
#include "slr/transfer.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "json_io.hpp"
#include "slr/error.hpp"

namespace slr {

using nlohmann::json;

std::size_t TensorEntry::element_count() const {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::vector<TensorEntry> tensor_directory(const Dims& dims) {
  const auto shapes = tensor_shapes(dims);
  std::vector<TensorEntry> dir;
  for (std::size_t i = 0; i < shapes.size(); ++i)
    dir.push_back({std::string(kTensorNames[i]), shapes[i]});
  return dir;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  return v;
}

json provenance_json(const Provenance& p) {
  auto opt = [](const auto& v) { return v ? json(*v) : json(nullptr); };
  return {{"config", p.config ? json(*p.config) : json(nullptr)},
          {"dataset_id", p.dataset_id},
          {"best_epoch", opt(p.best_epoch)},
          {"stopped_epoch", opt(p.stopped_epoch)},
          {"metrics", p.metrics},
          {"initialized_from", opt(p.initialized_from)}};
}

Provenance provenance_from(const json& j) {
  Provenance p;
  if (j.contains("config") && !j["config"].is_null()) p.config = j["config"].get<TrainConfig>();
  p.dataset_id = j.value("dataset_id", "");
  if (j.contains("best_epoch") && !j["best_epoch"].is_null())
    p.best_epoch = j["best_epoch"].get<std::size_t>();
  if (j.contains("stopped_epoch") && !j["stopped_epoch"].is_null())
    p.stopped_epoch = j["stopped_epoch"].get<std::size_t>();
  if (j.contains("metrics")) p.metrics = j["metrics"].get<std::map<std::string, double>>();
  if (j.contains("initialized_from") && !j["initialized_from"].is_null())
    p.initialized_from = j["initialized_from"].get<std::string>();
  return p;
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ck) {
  const ModelParams& params = ck.model.params;
  if (ck.model.labels.size() != params.dims.num_classes)
    throw Error(ErrorKind::label, "label map size does not match the model's class count");
  check_finite(params);

  json labels = json::object();
  for (std::size_t i = 0; i < ck.model.labels.size(); ++i) labels[ck.model.labels.name(i)] = i;
  json dir = json::array();
  for (const auto& e : tensor_directory(params.dims)) dir.push_back({{"name", e.name}, {"shape", e.shape}});

  const json meta = {{"dims", params.dims},
                     {"label_map", labels},
                     {"landmark_layout", ck.landmark_layout},
                     {"provenance", provenance_json(ck.provenance)},
                     {"tensors", dir}};
  const std::string meta_text = meta.dump();

  std::string out;
  out.reserve(12 + meta_text.size() + params.parameter_count() * 4);
  out += kCheckpointMagic;
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(meta_text.size()));
  out += meta_text;
  for (const Tensor* t : params.tensors())
    for (double v : t->data) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < 12 || bytes.substr(0, 4) != kCheckpointMagic)
    throw Error(ErrorKind::format, "not a checkpoint (magic mismatch)");
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kCheckpointVersion)
    throw Error(ErrorKind::format, "unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t meta_len = get_u32(bytes, 8);
  if (bytes.size() < 12 + static_cast<std::size_t>(meta_len))
    throw Error(ErrorKind::format, "checkpoint truncated inside metadata");

  json meta;
  try {
    meta = json::parse(bytes.substr(12, meta_len));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::format, std::string("corrupted checkpoint metadata: ") + e.what());
  }

  Checkpoint ck;
  Dims dims;
  std::vector<TensorEntry> dir;
  try {
    dims = meta.at("dims").get<Dims>();
    validate(dims);
    for (const auto& e : meta.at("tensors"))
      dir.push_back({e.at("name").get<std::string>(), e.at("shape").get<std::vector<std::size_t>>()});
    ck.landmark_layout = meta.at("landmark_layout").get<std::string>();
    ck.provenance = provenance_from(meta.value("provenance", json::object()));

    const auto& lm = meta.at("label_map");
    std::vector<std::string> names(lm.size());
    std::vector<bool> filled(lm.size(), false);
    for (auto it = lm.begin(); it != lm.end(); ++it) {
      const auto idx = it.value().get<std::size_t>();
      if (idx >= names.size() || filled[idx])
        throw Error(ErrorKind::format, "label map indices are not 0..K-1");
      names[idx] = it.key();
      filled[idx] = true;
    }
    ck.model.labels = LabelMap(std::move(names));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::format, std::string("corrupted checkpoint metadata: ") + e.what());
  }
  if (ck.model.labels.size() != dims.num_classes)
    throw Error(ErrorKind::format, "label map size does not match num_classes");
  if (dir != tensor_directory(dims))
    throw Error(ErrorKind::format, "corrupted tensor directory");

  std::size_t count = 0;
  for (const auto& e : dir) count += e.element_count();
  const std::size_t payload = bytes.size() - 12 - meta_len;
  if (payload != count * 4)
    throw Error(ErrorKind::format, "payload length mismatch: expected " + std::to_string(count * 4) +
                                       " bytes, found " + std::to_string(payload));

  ck.model.params = ModelParams::zeros(dims);
  std::size_t offset = 12 + meta_len;
  for (Tensor* t : ck.model.params.tensors())
    for (double& v : t->data) {
      v = static_cast<double>(std::bit_cast<float>(get_u32(bytes, offset)));
      offset += 4;
    }
  check_finite(ck.model.params);
  return ck;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& destination) {
  const std::string bytes = encode_checkpoint(checkpoint);
  std::ofstream out(destination, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + destination.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::io, "write failed for " + destination.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& source) {
  std::ifstream in(source, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + source.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

std::string_view to_string(TransferScope scope) {
  return scope == TransferScope::mlp_only ? "mlp" : "mlp_and_gru";
}

TransferScope parse_transfer_scope(std::string_view text) {
  if (text == "mlp" || text == "mlp_only") return TransferScope::mlp_only;
  if (text == "mlp_and_gru" || text == "mlp+gru") return TransferScope::mlp_and_gru;
  throw Error(ErrorKind::invalid_argument, "unknown transfer scope '" + std::string(text) + "'");
}

Model init_from_source(const Checkpoint& source, const Dims& target_dims,
                       const LabelMap& target_labels, TransferScope scope, std::uint64_t seed) {
  const Dims& s = source.model.params.dims;
  if (s.input != target_dims.input)
    throw Error(ErrorKind::dimension, "input width " + std::to_string(s.input) +
                                          " of the source differs from target " +
                                          std::to_string(target_dims.input));
  if (s.mlp_hidden != target_dims.mlp_hidden)
    throw Error(ErrorKind::dimension, "mlp_hidden " + std::to_string(s.mlp_hidden) +
                                          " of the source differs from target " +
                                          std::to_string(target_dims.mlp_hidden));
  if (scope == TransferScope::mlp_and_gru && s.gru_hidden != target_dims.gru_hidden)
    throw Error(ErrorKind::dimension, "gru_hidden " + std::to_string(s.gru_hidden) +
                                          " of the source differs from target " +
                                          std::to_string(target_dims.gru_hidden));
  if (target_labels.size() != target_dims.num_classes)
    throw Error(ErrorKind::label, "target label map size does not match num_classes");

  Model out{init_params(target_dims, seed), target_labels};
  const ModelParams& src = source.model.params;
  ModelParams& dst = out.params;
  dst.w1 = src.w1;
  dst.b1 = src.b1;
  if (scope == TransferScope::mlp_and_gru) {
    dst.wz = src.wz;
    dst.wr = src.wr;
    dst.wn = src.wn;
    dst.uz = src.uz;
    dst.ur = src.ur;
    dst.un = src.un;
    dst.bz = src.bz;
    dst.br = src.br;
    dst.bn = src.bn;
  }
  return out;
}

double relative_improvement(double baseline_pct, double tl_pct) {
  if (baseline_pct == 0.0 || !std::isfinite(baseline_pct) || !std::isfinite(tl_pct))
    throw Error(ErrorKind::invalid_argument, "relative improvement needs a non-zero baseline");
  if (baseline_pct < 0.0)
    throw Error(ErrorKind::invalid_argument, "baseline percentage must be positive");
  const double rel = (tl_pct - baseline_pct) / baseline_pct * 100.0;
  return std::round(rel * 100.0) / 100.0;
}

}  // namespace slr
