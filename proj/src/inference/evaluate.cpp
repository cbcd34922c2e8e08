#include "phantom/inference/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "phantom/ad/ops.hpp"
#include "phantom/core/model.hpp"
#include "phantom/util/csv.hpp"
#include "phantom/util/error.hpp"

namespace phantom::inference {

using ad::Tensor;
using ad::Var;

core::SteeringClass classify_user(const core::SteeringStrength& s) {
  if (s.s1 < 0.2 && s.s2 < 0.1) return core::SteeringClass::non_steerer;
  if (s.s1 > 0.3 && s.s2 > 0.3) return core::SteeringClass::strong_steerer;
  return core::SteeringClass::other;
}

std::array<std::size_t, 3> FitReport::census() const {
  std::array<std::size_t, 3> c{};
  for (const auto& f : fits) {
    switch (f.label) {
      case core::SteeringClass::non_steerer:
        ++c[0];
        break;
      case core::SteeringClass::other:
        ++c[1];
        break;
      case core::SteeringClass::strong_steerer:
        ++c[2];
        break;
    }
  }
  return c;
}

FitReport evaluate(const SteeringModel& model, std::span<const core::ActionTrajectory> data,
                   const EvalConfig& config) {
  require(!data.empty(), "evaluation set is empty");
  require(config.n_mc >= 1 && config.n_strength >= 1 && config.batch_size >= 1, "invalid evaluation config");
  const std::size_t m = model.config().latent_dim;
  const std::size_t D = static_cast<std::size_t>(model.config().window.length);
  FitReport report;
  report.model = model.kind();
  report.users = data.size();
  double total_elbo = 0.0, total_sq = 0.0;
  for (std::size_t begin = 0, chunk = 0; begin < data.size(); begin += config.batch_size, ++chunk) {
    const std::size_t end = std::min(data.size(), begin + config.batch_size);
    std::vector<std::size_t> rows(end - begin);
    std::iota(rows.begin(), rows.end(), begin);
    const Batch b = make_batch(data, rows, model.config().window);
    Rng rng = stream_rng(config.seed, chunk);
    const ElboResult e = elbo(model, b, rng, ElboOptions{config.n_mc, std::nullopt});

    const Var enc = model.encoder().forward(ad::constant(b.features));
    const Var mu = ad::slice_cols(enc, 0, m);
    const Var sigma = ad::exp(ad::slice_cols(enc, m, 2 * m));

    // Posterior-mean strength over n_strength samples of z0 ~ q.
    std::vector<double> s1(b.size(), 0.0), s2(b.size(), 0.0);
    if (model.kind() == core::ModelKind::user_steering) {
      const auto noise = draw_noise(b.size(), m, config.n_strength, rng);
      for (const Tensor& eps : noise) {
        const Var z0 = ad::add(mu, ad::mul(sigma, ad::constant(eps)));
        const Var zk = flows::flow_forward(model.flow(), z0).z;
        for (std::size_t i = 0; i < b.size(); ++i) {
          s1[i] += ad::sigmoid(zk.value()(i, m - 2));
          s2[i] += ad::sigmoid(zk.value()(i, m - 1));
        }
      }
      for (std::size_t i = 0; i < b.size(); ++i) {
        s1[i] /= static_cast<double>(config.n_strength);
        s2[i] /= static_cast<double>(config.n_strength);
      }
    } else if (model.kind() == core::ModelKind::uniform_steering) {
      std::fill(s1.begin(), s1.end(), 1.0);
      std::fill(s2.begin(), s2.end(), 1.0);
    }

    // Expected counts at zK = flow(mu).
    const Var zk_mean = flows::flow_forward(model.flow(), mu).z;
    const PreRates r = pre_rates(model, decode(model, zk_mean), b);
    for (std::size_t i = 0; i < b.size(); ++i) {
      UserFit f;
      f.user_id = b.user_ids[i];
      f.elbo = e.per_user[i];
      f.strength = {s1[i], s2[i]};
      f.label = classify_user(f.strength);
      for (std::size_t d = 0; d < D; ++d) {
        const double a = std::clamp(ad::sigmoid(r.logit_alpha.value()(i, d)), core::kMinActivity, core::kMaxActivity);
        const double expect = a * ad::softplus(r.pre_lambda.value()(i, d));
        const double diff = b.counts(i, d) - expect;
        f.expected_counts.push_back(expect);
        f.squared_error += diff * diff;
      }
      total_elbo += f.elbo;
      total_sq += f.squared_error;
      report.fits.push_back(std::move(f));
    }
  }
  report.elbo_per_user = total_elbo / static_cast<double>(data.size());
  report.mse = total_sq / static_cast<double>(data.size() * D);
  return report;
}

NaiveBaseline naive_baseline(std::span<const core::ActionTrajectory> train_set) {
  require(!train_set.empty(), "naive baseline needs a nonempty training set");
  const std::size_t D = train_set.front().counts.size();
  std::vector<double> active(D, 0.0), total(D, 0.0);
  for (const auto& t : train_set) {
    require(t.counts.size() == D, "naive baseline needs equal-length trajectories");
    for (std::size_t d = 0; d < D; ++d) {
      if (t.counts[d] > 0) {
        active[d] += 1.0;
        total[d] += t.counts[d];
      }
    }
  }
  NaiveBaseline b;
  for (std::size_t d = 0; d < D; ++d) {
    b.rates.alpha.push_back(active[d] / static_cast<double>(train_set.size()));
    b.rates.lambda.push_back(active[d] > 0.0 ? total[d] / active[d] : NaiveBaseline::kEmptyDayRate);
  }
  return b;
}

double naive_log_likelihood(const NaiveBaseline& b, std::span<const core::ActionTrajectory> data) {
  require(!data.empty(), "log-likelihood needs a nonempty data set");
  double total = 0.0;
  for (const auto& t : data) {
    require(t.counts.size() == b.rates.alpha.size(), "trajectory length differs from the baseline");
    for (std::size_t d = 0; d < t.counts.size(); ++d)
      total += core::zip_log_pmf(t.counts[d], std::clamp(b.rates.alpha[d], core::kMinActivity, 1.0), b.rates.lambda[d]);
  }
  return total / static_cast<double>(data.size());
}

double naive_mse(const NaiveBaseline& b, std::span<const core::ActionTrajectory> data) {
  require(!data.empty(), "MSE needs a nonempty data set");
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& t : data) {
    require(t.counts.size() == b.rates.alpha.size(), "trajectory length differs from the baseline");
    for (std::size_t d = 0; d < t.counts.size(); ++d) {
      const double diff = t.counts[d] - b.rates.alpha[d] * b.rates.lambda[d];
      total += diff * diff;
      ++n;
    }
  }
  return total / static_cast<double>(n);
}

double beta_gradient_norm(const SteeringModel& model, std::span<const core::ActionTrajectory> data,
                          std::uint64_t seed, std::size_t n_mc) {
  require(!data.empty(), "gradient probe needs data");
  for (auto v : model.parameters().vars()) v.zero_grad();
  const Batch b = make_batch(data, model.config().window);
  Rng rng(seed);
  const ElboResult e = elbo(model, b, rng, ElboOptions{n_mc, std::nullopt});
  ad::backward(e.objective);
  double sq = 0.0;
  for (const auto& v : model.beta().vars())
    if (!v.grad().empty())
      for (double g : v.grad().values()) sq += g * g;
  for (auto v : model.parameters().vars()) v.zero_grad();
  return std::sqrt(sq);
}

core::PreferredProfile reference_profile(const SteeringModel& model) {
  const Var z0 = ad::constant(Tensor(1, model.config().latent_dim));
  const Decoded d = decode(model, flows::flow_forward(model.flow(), z0).z);
  core::PreferredProfile p;
  for (int i = 0; i < core::kDaysPerWeek; ++i) {
    p.p1_week[i] = d.p1.value()[i];
    p.p2_week[i] = d.p2.value()[i];
  }
  return p;
}

BetaReport extract_beta(const SteeringModel& model, const core::PreferredProfile& reference, double grad_norm,
                        double tolerance) {
  BetaReport r;
  const core::Window w = model.config().window;
  r.beta = model.beta().realize(w);
  const auto steered = core::compute_rates(reference, {1.0, 1.0}, r.beta, 0);
  const auto base = core::baseline_rates(reference, w, 0);
  for (std::size_t d = 0; d < steered.alpha.size(); ++d)
    r.expected_deviation.push_back(steered.expected_count(d) - base.expected_count(d));
  r.beta_grad_norm = grad_norm;
  r.identifiability_warning = grad_norm < tolerance;
  return r;
}

int beta2_peak_relative_day(const core::SteeringDeviation& beta) {
  require(!beta.beta2.empty(), "empty deviation");
  const auto it = std::max_element(beta.beta2.begin(), beta.beta2.end());
  return static_cast<int>(it - beta.beta2.begin()) - beta.day0_index;
}

void write_fit_csv(std::ostream& out, const FitReport& report) {
  out << "user_id,elbo,s1,s2,label\n";
  for (const auto& f : report.fits)
    out << f.user_id << ',' << format_fixed(f.elbo, 6) << ',' << format_fixed(f.strength.s1, 6) << ','
        << format_fixed(f.strength.s2, 6) << ',' << core::to_string(f.label) << '\n';
}

nlohmann::ordered_json fit_summary(const FitReport& report) {
  nlohmann::ordered_json j;
  j["model"] = core::to_int(report.model);
  j["users"] = report.users;
  j["elbo_per_user"] = report.elbo_per_user;
  j["mse"] = report.mse;
  const auto c = report.census();
  j["census"] = {{"non-steerer", c[0]}, {"other", c[1]}, {"strong-steerer", c[2]}};
  return j;
}

void write_beta_csv(std::ostream& out, const BetaReport& report) {
  out << "relative_day,beta1,beta2,expected_deviation\n";
  for (std::size_t d = 0; d < report.beta.beta1.size(); ++d)
    out << static_cast<int>(d) - report.beta.day0_index << ',' << format_fixed(report.beta.beta1[d], 6) << ','
        << format_fixed(report.beta.beta2[d], 6) << ',' << format_fixed(report.expected_deviation[d], 6) << '\n';
}

}  // namespace phantom::inference
