#include "phantom/ad/checkpoint.hpp"

#include <fstream>

#include "phantom/util/error.hpp"

namespace phantom::ad {

const Tensor& Checkpoint::tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw InvalidArgument("checkpoint has no tensor '" + name + "'");
}

Checkpoint capture(const ParameterSet& params, nlohmann::ordered_json meta) {
  Checkpoint c;
  c.meta = std::move(meta);
  for (const Var& v : params.vars()) c.tensors.emplace_back(v.name(), v.value());
  return c;
}

void apply(const Checkpoint& ckpt, ParameterSet& params) {
  for (const Var& v : params.vars()) {
    const Tensor& t = ckpt.tensor(v.name());
    require(t.same_shape(v.value()), "checkpoint tensor '" + v.name() + "' has shape " +
                                         t.shape_string() + ", expected " +
                                         v.value().shape_string());
    Var handle = v;
    handle.mutable_value() = t;
  }
}

nlohmann::ordered_json to_json(const Checkpoint& ckpt) {
  nlohmann::ordered_json j;
  j["format"] = "phantom-checkpoint";
  j["version"] = kCheckpointVersion;
  j["meta"] = ckpt.meta;
  auto& arr = j["parameters"] = nlohmann::ordered_json::array();
  for (const auto& [name, t] : ckpt.tensors) {
    nlohmann::ordered_json p;
    p["name"] = name;
    p["shape"] = {t.rows(), t.cols()};
    p["values"] = std::vector<double>(t.values().begin(), t.values().end());
    arr.push_back(std::move(p));
  }
  return j;
}

Checkpoint checkpoint_from_json(const nlohmann::ordered_json& j) {
  try {
    require(j.at("format") == "phantom-checkpoint", "not a phantom checkpoint");
    const int version = j.at("version").get<int>();
    require(version == kCheckpointVersion,
            "unsupported checkpoint version " + std::to_string(version));
    Checkpoint c;
    c.meta = j.at("meta");
    for (const auto& p : j.at("parameters")) {
      const auto shape = p.at("shape").get<std::vector<std::size_t>>();
      require(shape.size() == 2, "checkpoint shape must have two entries");
      c.tensors.emplace_back(p.at("name").get<std::string>(),
                             Tensor(shape[0], shape[1], p.at("values").get<std::vector<double>>()));
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path);
  require(static_cast<bool>(out), "cannot write checkpoint " + path.string());
  out << to_json(ckpt).dump(1) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot read checkpoint " + path.string());
  nlohmann::ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("malformed checkpoint " + path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace phantom::ad
