#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "phantom/ad/adam.hpp"
#include "phantom/ad/checkpoint.hpp"
#include "phantom/core/types.hpp"
#include "phantom/inference/model.hpp"

namespace phantom::inference {

struct TrainConfig {
  std::size_t epochs = 500;
  std::size_t batch_size = 128;
  std::size_t patience = 20;  // stagnant validation epochs before stopping; 0 disables
  std::size_t n_mc_train = 1;
  std::size_t n_mc_validation = 8;
  ad::AdamConfig adam;
  std::uint64_t seed = 1;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_elbo = 0.0;
  double validation_elbo = 0.0;
  double beta_grad_norm = 0.0;  // largest per-step gradient norm of the raw deviation
};

struct TrainResult {
  ad::Checkpoint best;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 0 = the initialization
  double best_validation_elbo = 0.0;
  double max_beta_grad_norm = 0.0;
  bool diverged = false;
  std::string divergence_message;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Maximizes the ELBO with Adam on minibatches of `train_set`, tracking the
/// ELBO of `validation_set` on frozen noise. The model ends holding the best
/// validation parameters (the initialization when epochs = 0). A non-finite
/// ELBO or gradient stops training with `diverged` set and the last good
/// parameters restored.
TrainResult train(SteeringModel& model, std::span<const core::ActionTrajectory> train_set,
                  std::span<const core::ActionTrajectory> validation_set, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// Mean ELBO over a data set in fixed batches on fixed noise.
double mean_elbo(const SteeringModel& model, std::span<const core::ActionTrajectory> data,
                 std::span<const ad::Tensor> noise, std::size_t batch_size = 256);

void write_history_csv(std::ostream& out, std::span<const EpochRecord> history);

}  // namespace phantom::inference
