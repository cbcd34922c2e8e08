#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "phantom/ad/checkpoint.hpp"
#include "phantom/ad/network.hpp"
#include "phantom/ad/parameters.hpp"
#include "phantom/core/types.hpp"
#include "phantom/flows/planar.hpp"
#include "phantom/util/rng.hpp"

namespace phantom::inference {

struct ModelConfig {
  core::ModelKind model = core::ModelKind::user_steering;
  std::size_t latent_dim = 20;
  std::size_t flow_layers = 12;
  std::vector<std::size_t> encoder_hidden{128, 128};
  std::vector<std::size_t> decoder_hidden{64, 64};
  ad::Activation activation = ad::Activation::tanh;
  core::Window window;
  double flow_init_scale = 0.01;
  // softplus(0) = log 2: every realized beta entry starts at +-0.69.
  double beta_init_raw = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static ModelConfig from_json(const nlohmann::ordered_json& j);
};

/// Sign-constrained global deviation: beta = (+softplus(raw_pre), -softplus(raw_post))
/// per channel, with day 0 on the pre side.
struct TrainableBeta {
  ad::Var raw_pre1, raw_post1, raw_pre2, raw_post2;

  static TrainableBeta init(const core::Window& w, double raw);
  ad::Var beta1() const;  // 1 x D
  ad::Var beta2() const;  // 1 x D
  core::SteeringDeviation realize(const core::Window& w) const;
  void collect(ad::ParameterSet& out) const;
  std::vector<ad::Var> vars() const { return {raw_pre1, raw_post1, raw_pre2, raw_post2}; }
};

/// Encoder, generative flow, decoder heads and the global deviation.
class SteeringModel {
 public:
  explicit SteeringModel(ModelConfig config);

  const ModelConfig& config() const noexcept { return config_; }
  core::ModelKind kind() const noexcept { return config_.model; }
  const ad::DenseNetwork& encoder() const noexcept { return encoder_; }
  ad::DenseNetwork& encoder() noexcept { return encoder_; }
  const flows::FlowStack& flow() const noexcept { return flow_; }
  flows::FlowStack& flow() noexcept { return flow_; }
  const ad::DenseNetwork& decoder() const noexcept { return decoder_; }
  ad::DenseNetwork& decoder() noexcept { return decoder_; }
  const TrainableBeta& beta() const noexcept { return beta_; }
  TrainableBeta& beta() noexcept { return beta_; }
  const ad::ParameterSet& parameters() const noexcept { return params_; }

  ad::Checkpoint checkpoint(nlohmann::ordered_json extra = nlohmann::ordered_json::object()) const;
  static SteeringModel from_checkpoint(const ad::Checkpoint& ckpt);
  void load(const ad::Checkpoint& ckpt);

 private:
  ModelConfig config_;
  ad::DenseNetwork encoder_;
  flows::FlowStack flow_;
  ad::DenseNetwork decoder_;
  TrainableBeta beta_;
  ad::ParameterSet params_;
};

/// Network inputs and targets for a set of users.
struct Batch {
  std::vector<std::string> user_ids;
  ad::Tensor features;                   // B x (D + 7): log1p(counts), one-hot weekday of day 0
  ad::Tensor counts;                     // B x D
  std::vector<std::size_t> weekday_index;  // B x D row-major weekday of every day
  std::size_t size() const noexcept { return user_ids.size(); }
};

Batch make_batch(std::span<const core::ActionTrajectory> data, std::span<const std::size_t> rows,
                 const core::Window& window);
Batch make_batch(std::span<const core::ActionTrajectory> data, const core::Window& window);

/// Decoded quantities for latent points zK (B x m).
struct Decoded {
  ad::Var p1;  // B x 7
  ad::Var p2;  // B x 7
  ad::Var s1;  // B x 1, or empty when the model fixes S
  ad::Var s2;
};

Decoded decode(const SteeringModel& model, const ad::Var& zk);

/// Pre-link rates: logit_alpha = P1 tiled + s1 * beta1, pre_lambda = P2 tiled + s2 * beta2.
struct PreRates {
  ad::Var logit_alpha;  // B x D
  ad::Var pre_lambda;   // B x D
};

PreRates pre_rates(const SteeringModel& model, const Decoded& d, const Batch& batch,
                   const std::optional<core::SteeringStrength>& strength_override = std::nullopt);

struct ElboOptions {
  std::size_t n_mc = 1;
  // Replaces the model's S for every user (nesting checks).
  std::optional<core::SteeringStrength> strength_override;
};

struct ElboResult {
  ad::Var objective;               // 1 x 1: mean ELBO over the batch
  std::vector<double> per_user;    // ELBO of every row
  std::vector<double> expected_ll; // E_q[log p(x | z)] of every row
  std::vector<double> kl;          // KL(q(z0 | x) || N(0, I)) of every row
};

/// Reparameterized estimate with base noise eps ~ N(0, I) drawn from `rng`.
ElboResult elbo(const SteeringModel& model, const Batch& batch, Rng& rng, const ElboOptions& options = {});
/// Same estimate on explicit noise: one B x m tensor per Monte Carlo sample.
ElboResult elbo(const SteeringModel& model, const Batch& batch, std::span<const ad::Tensor> noise,
                const ElboOptions& options = {});

std::vector<ad::Tensor> draw_noise(std::size_t rows, std::size_t dim, std::size_t n_mc, Rng& rng);

}  // namespace phantom::inference
