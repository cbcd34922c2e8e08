#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "phantom/ad/parameters.hpp"

namespace phantom::ad {

inline constexpr int kCheckpointVersion = 1;

/// On-disk JSON: {"format": "phantom-checkpoint", "version": 1, "meta": {...},
/// "parameters": [{"name", "shape": [rows, cols], "values": [row-major]}]}.
struct Checkpoint {
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor& tensor(const std::string& name) const;
};

Checkpoint capture(const ParameterSet& params, nlohmann::ordered_json meta);
/// Copies values into matching parameters; every parameter must be present
/// with the same shape.
void apply(const Checkpoint& ckpt, ParameterSet& params);

nlohmann::ordered_json to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::ordered_json& j);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace phantom::ad
