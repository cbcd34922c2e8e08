#include "phantom/inference/model.hpp"

#include <cmath>

#include "phantom/ad/ops.hpp"
#include "phantom/util/error.hpp"

namespace phantom::inference {

using ad::Tensor;
using ad::Var;
using core::kDaysPerWeek;

void ModelConfig::validate() const {
  window.validate();
  require(window.day0_index + 1 < window.length, "window needs at least one day after day 0");
  require(latent_dim >= 1, "latent_dim must be positive");
  require(model != core::ModelKind::user_steering || latent_dim >= 2,
          "model 2 needs latent_dim >= 2 (two coordinates carry S)");
  for (std::size_t h : encoder_hidden) require(h > 0, "encoder hidden sizes must be positive");
  for (std::size_t h : decoder_hidden) require(h > 0, "decoder hidden sizes must be positive");
  require(flow_init_scale >= 0.0 && std::isfinite(flow_init_scale), "flow_init_scale must be nonnegative");
  require(std::isfinite(beta_init_raw), "beta_init_raw must be finite");
}

nlohmann::ordered_json ModelConfig::to_json() const {
  nlohmann::ordered_json j;
  j["model"] = core::to_int(model);
  j["latent_dim"] = latent_dim;
  j["flow_layers"] = flow_layers;
  j["encoder_hidden"] = encoder_hidden;
  j["decoder_hidden"] = decoder_hidden;
  j["activation"] = ad::to_string(activation);
  j["window_length"] = window.length;
  j["day0_index"] = window.day0_index;
  j["flow_init_scale"] = flow_init_scale;
  j["beta_init_raw"] = beta_init_raw;
  j["seed"] = seed;
  return j;
}

ModelConfig ModelConfig::from_json(const nlohmann::ordered_json& j) {
  try {
    ModelConfig c;
    c.model = core::model_from_int(j.at("model").get<int>());
    c.latent_dim = j.at("latent_dim").get<std::size_t>();
    c.flow_layers = j.at("flow_layers").get<std::size_t>();
    c.encoder_hidden = j.at("encoder_hidden").get<std::vector<std::size_t>>();
    c.decoder_hidden = j.at("decoder_hidden").get<std::vector<std::size_t>>();
    c.activation = ad::activation_from_string(j.at("activation").get<std::string>());
    c.window = {j.at("window_length").get<int>(), j.at("day0_index").get<int>()};
    c.flow_init_scale = j.at("flow_init_scale").get<double>();
    c.beta_init_raw = j.at("beta_init_raw").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed model config: ") + e.what());
  }
}

TrainableBeta TrainableBeta::init(const core::Window& w, double raw) {
  const auto pre = static_cast<std::size_t>(w.day0_index + 1);
  const auto post = static_cast<std::size_t>(w.length - w.day0_index - 1);
  return {ad::parameter(Tensor(1, pre, raw), "beta.pre1"), ad::parameter(Tensor(1, post, raw), "beta.post1"),
          ad::parameter(Tensor(1, pre, raw), "beta.pre2"), ad::parameter(Tensor(1, post, raw), "beta.post2")};
}

Var TrainableBeta::beta1() const {
  return ad::concat_cols({ad::softplus(raw_pre1), ad::neg(ad::softplus(raw_post1))});
}

Var TrainableBeta::beta2() const {
  return ad::concat_cols({ad::softplus(raw_pre2), ad::neg(ad::softplus(raw_post2))});
}

core::SteeringDeviation TrainableBeta::realize(const core::Window& w) const {
  core::SteeringDeviation d;
  d.day0_index = w.day0_index;
  const Tensor b1 = beta1().value(), b2 = beta2().value();
  d.beta1.assign(b1.values().begin(), b1.values().end());
  d.beta2.assign(b2.values().begin(), b2.values().end());
  return d;
}

void TrainableBeta::collect(ad::ParameterSet& out) const {
  for (const auto& v : vars()) out.add(v);
}

SteeringModel::SteeringModel(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  Rng rng(config_.seed);
  const std::size_t D = static_cast<std::size_t>(config_.window.length);
  const std::size_t m = config_.latent_dim;
  std::vector<std::size_t> enc{D + kDaysPerWeek};
  enc.insert(enc.end(), config_.encoder_hidden.begin(), config_.encoder_hidden.end());
  enc.push_back(2 * m);
  std::vector<std::size_t> dec{m};
  dec.insert(dec.end(), config_.decoder_hidden.begin(), config_.decoder_hidden.end());
  dec.push_back(2 * kDaysPerWeek);
  encoder_ = ad::DenseNetwork("encoder", enc, config_.activation, rng);
  flow_ = flows::FlowStack("flow", m, config_.flow_layers, rng, config_.flow_init_scale);
  decoder_ = ad::DenseNetwork("decoder", dec, config_.activation, rng);
  beta_ = TrainableBeta::init(config_.window, config_.beta_init_raw);
  encoder_.collect(params_);
  flow_.collect(params_);
  decoder_.collect(params_);
  beta_.collect(params_);
}

ad::Checkpoint SteeringModel::checkpoint(nlohmann::ordered_json extra) const {
  nlohmann::ordered_json meta;
  meta["config"] = config_.to_json();
  for (auto it = extra.begin(); it != extra.end(); ++it) meta[it.key()] = it.value();
  return ad::capture(params_, std::move(meta));
}

SteeringModel SteeringModel::from_checkpoint(const ad::Checkpoint& ckpt) {
  require(ckpt.meta.contains("config"), "checkpoint has no model config");
  SteeringModel m(ModelConfig::from_json(ckpt.meta.at("config")));
  m.load(ckpt);
  return m;
}

void SteeringModel::load(const ad::Checkpoint& ckpt) { ad::apply(ckpt, params_); }

Batch make_batch(std::span<const core::ActionTrajectory> data, std::span<const std::size_t> rows,
                 const core::Window& window) {
  const std::size_t D = static_cast<std::size_t>(window.length);
  Batch b;
  b.features = Tensor(rows.size(), D + kDaysPerWeek);
  b.counts = Tensor(rows.size(), D);
  b.weekday_index.resize(rows.size() * D);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r] < data.size(), "batch row out of range");
    const auto& t = data[rows[r]];
    t.validate();
    require(t.window() == window, "trajectory " + t.user_id + " does not match the model window");
    b.user_ids.push_back(t.user_id);
    for (std::size_t d = 0; d < D; ++d) {
      b.counts(r, d) = t.counts[d];
      b.features(r, d) = std::log1p(static_cast<double>(t.counts[d]));
      b.weekday_index[r * D + d] =
          static_cast<std::size_t>(core::weekday_at(static_cast<int>(d), t.weekday_of_day0, window));
    }
    b.features(r, D + static_cast<std::size_t>(t.weekday_of_day0)) = 1.0;
  }
  return b;
}

Batch make_batch(std::span<const core::ActionTrajectory> data, const core::Window& window) {
  std::vector<std::size_t> rows(data.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return make_batch(data, rows, window);
}

Decoded decode(const SteeringModel& model, const Var& zk) {
  const Var out = model.decoder().forward(zk);
  Decoded d{ad::slice_cols(out, 0, kDaysPerWeek), ad::slice_cols(out, kDaysPerWeek, 2 * kDaysPerWeek), {}, {}};
  if (model.kind() == core::ModelKind::user_steering) {
    const std::size_t m = model.config().latent_dim;
    const Var s = ad::sigmoid(ad::slice_cols(zk, m - 2, m));
    d.s1 = ad::slice_cols(s, 0, 1);
    d.s2 = ad::slice_cols(s, 1, 2);
  }
  return d;
}

PreRates pre_rates(const SteeringModel& model, const Decoded& d, const Batch& batch,
                   const std::optional<core::SteeringStrength>& strength_override) {
  const std::size_t B = batch.size();
  const std::size_t D = static_cast<std::size_t>(model.config().window.length);
  PreRates r{ad::gather_cols(d.p1, batch.weekday_index, B, D), ad::gather_cols(d.p2, batch.weekday_index, B, D)};
  if (strength_override) {
    r.logit_alpha = ad::add(r.logit_alpha, ad::scale(model.beta().beta1(), strength_override->s1));
    r.pre_lambda = ad::add(r.pre_lambda, ad::scale(model.beta().beta2(), strength_override->s2));
    return r;
  }
  switch (model.kind()) {
    case core::ModelKind::no_steering:
      break;
    case core::ModelKind::uniform_steering:
      r.logit_alpha = ad::add(r.logit_alpha, model.beta().beta1());
      r.pre_lambda = ad::add(r.pre_lambda, model.beta().beta2());
      break;
    case core::ModelKind::user_steering:
      r.logit_alpha = ad::add(r.logit_alpha, ad::mul(d.s1, model.beta().beta1()));
      r.pre_lambda = ad::add(r.pre_lambda, ad::mul(d.s2, model.beta().beta2()));
      break;
  }
  return r;
}

std::vector<Tensor> draw_noise(std::size_t rows, std::size_t dim, std::size_t n_mc, Rng& rng) {
  std::normal_distribution<double> normal;
  std::vector<Tensor> out;
  for (std::size_t s = 0; s < n_mc; ++s) {
    Tensor t(rows, dim);
    for (double& x : t.values()) x = normal(rng);
    out.push_back(std::move(t));
  }
  return out;
}

ElboResult elbo(const SteeringModel& model, const Batch& batch, Rng& rng, const ElboOptions& options) {
  require(options.n_mc >= 1, "n_mc must be at least 1");
  const auto noise = draw_noise(batch.size(), model.config().latent_dim, options.n_mc, rng);
  return elbo(model, batch, noise, options);
}

ElboResult elbo(const SteeringModel& model, const Batch& batch, std::span<const Tensor> noise,
                const ElboOptions& options) {
  require(batch.size() > 0, "ELBO needs a nonempty batch");
  require(!noise.empty(), "ELBO needs at least one noise sample");
  const std::size_t m = model.config().latent_dim;
  const Var enc = model.encoder().forward(ad::constant(batch.features));
  const Var mu = ad::slice_cols(enc, 0, m);
  const Var log_sigma = ad::slice_cols(enc, m, 2 * m);
  const Var sigma = ad::exp(log_sigma);

  Var ll_sum;
  for (const Tensor& eps : noise) {
    require(eps.rows() == batch.size() && eps.cols() == m, "noise shape must be batch x latent_dim");
    const Var z0 = ad::add(mu, ad::mul(sigma, ad::constant(eps)));
    const flows::FlowOutput f = flows::flow_forward(model.flow(), z0);
    const Decoded d = decode(model, f.z);
    const PreRates r = pre_rates(model, d, batch, options.strength_override);
    const Var ll = ad::sum_cols(ad::zip_log_prob(r.logit_alpha, r.pre_lambda, batch.counts));
    ll_sum = ll_sum.valid() ? ad::add(ll_sum, ll) : ll;
  }
  const Var expected_ll = ad::scale(ll_sum, 1.0 / static_cast<double>(noise.size()));
  const Var kl = ad::scale(
      ad::sum_cols(ad::sub(ad::add_scalar(ad::add(ad::square(mu), ad::square(sigma)), -1.0), ad::scale(log_sigma, 2.0))),
      0.5);
  const Var per_user = ad::sub(expected_ll, kl);

  ElboResult out;
  out.objective = ad::mean(per_user);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double v = per_user.value()[i];
    if (!std::isfinite(v))
      throw NumericalError("non-finite ELBO for user '" + batch.user_ids[i] + "' (batch row " + std::to_string(i) + ")");
    out.per_user.push_back(v);
    out.expected_ll.push_back(expected_ll.value()[i]);
    out.kl.push_back(kl.value()[i]);
  }
  return out;
}

}  // namespace phantom::inference
