#include "phantom/inference/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "phantom/ad/ops.hpp"
#include "phantom/util/csv.hpp"
#include "phantom/util/error.hpp"

namespace phantom::inference {

using ad::Tensor;

namespace {

// Rows [begin, end) of each noise tensor.
std::vector<Tensor> noise_rows(std::span<const Tensor> noise, std::size_t begin, std::size_t end) {
  std::vector<Tensor> out;
  for (const Tensor& t : noise) {
    Tensor part(end - begin, t.cols());
    std::copy(t.data() + begin * t.cols(), t.data() + end * t.cols(), part.data());
    out.push_back(std::move(part));
  }
  return out;
}

double beta_grad_norm(const SteeringModel& model) {
  double sq = 0.0;
  for (const auto& v : model.beta().vars())
    if (!v.grad().empty())
      for (double g : v.grad().values()) sq += g * g;
  return std::sqrt(sq);
}

}  // namespace

double mean_elbo(const SteeringModel& model, std::span<const core::ActionTrajectory> data,
                 std::span<const Tensor> noise, std::size_t batch_size) {
  require(!data.empty(), "mean_elbo needs a nonempty data set");
  double total = 0.0;
  for (std::size_t begin = 0; begin < data.size(); begin += batch_size) {
    const std::size_t end = std::min(data.size(), begin + batch_size);
    std::vector<std::size_t> rows(end - begin);
    std::iota(rows.begin(), rows.end(), begin);
    const Batch b = make_batch(data, rows, model.config().window);
    const auto part = noise_rows(noise, begin, end);
    for (double v : elbo(model, b, part).per_user) total += v;
  }
  return total / static_cast<double>(data.size());
}

TrainResult train(SteeringModel& model, std::span<const core::ActionTrajectory> train_set,
                  std::span<const core::ActionTrajectory> validation_set, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  require(!train_set.empty(), "training set is empty");
  require(!validation_set.empty(), "validation set is empty");
  require(config.batch_size >= 1, "batch_size must be positive");
  require(config.n_mc_train >= 1 && config.n_mc_validation >= 1, "n_mc must be at least 1");
  const std::size_t m = model.config().latent_dim;

  Rng validation_rng = stream_rng(config.seed, 0);
  const auto validation_noise = draw_noise(validation_set.size(), m, config.n_mc_validation, validation_rng);

  TrainResult result;
  result.best_validation_elbo = mean_elbo(model, validation_set, validation_noise);
  result.best = model.checkpoint();

  std::vector<ad::Var> params = model.parameters().vars();
  ad::AdamState adam = ad::make_adam_state(params, config.adam);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t stagnant = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng rng = stream_rng(config.seed, epoch);
    std::shuffle(order.begin(), order.end(), rng);
    EpochRecord rec;
    rec.epoch = epoch;
    double train_total = 0.0;
    try {
      for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
        const std::size_t end = std::min(order.size(), begin + config.batch_size);
        const Batch b = make_batch(train_set, std::span(order).subspan(begin, end - begin), model.config().window);
        for (auto& p : params) p.zero_grad();
        const ElboResult e = elbo(model, b, rng, ElboOptions{config.n_mc_train, std::nullopt});
        ad::backward(ad::neg(e.objective));
        rec.beta_grad_norm = std::max(rec.beta_grad_norm, beta_grad_norm(model));
        ad::adam_step(adam, params);
        for (double v : e.per_user) train_total += v;
      }
      rec.train_elbo = train_total / static_cast<double>(order.size());
      rec.validation_elbo = mean_elbo(model, validation_set, validation_noise);
    } catch (const NumericalError& e) {
      result.diverged = true;
      result.divergence_message = "epoch " + std::to_string(epoch) + ": " + e.what();
      model.load(result.best);
      return result;
    }
    result.max_beta_grad_norm = std::max(result.max_beta_grad_norm, rec.beta_grad_norm);
    result.history.push_back(rec);
    bool stop = false;
    if (rec.validation_elbo > result.best_validation_elbo) {
      result.best_validation_elbo = rec.validation_elbo;
      result.best_epoch = epoch;
      result.best = model.checkpoint();
      stagnant = 0;
    } else if (config.patience > 0 && ++stagnant >= config.patience) {
      stop = true;
    }
    if (on_epoch) on_epoch(rec);
    if (stop) break;
  }
  model.load(result.best);
  return result;
}

void write_history_csv(std::ostream& out, std::span<const EpochRecord> history) {
  out << "epoch,train_elbo,validation_elbo,beta_grad_norm\n";
  for (const auto& r : history)
    out << r.epoch << ',' << format_fixed(r.train_elbo, 6) << ',' << format_fixed(r.validation_elbo, 6) << ','
        << format_exact(r.beta_grad_norm) << '\n';
}

}  // namespace phantom::inference
