#include "phantom/cli/cli.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "phantom/ad/checkpoint.hpp"
#include "phantom/cli/svg.hpp"
#include "phantom/core/model.hpp"
#include "phantom/core/trajectory_io.hpp"
#include "phantom/inference/evaluate.hpp"
#include "phantom/inference/model.hpp"
#include "phantom/inference/train.hpp"
#include "phantom/ingest/ingest.hpp"
#include "phantom/renewal/bump.hpp"
#include "phantom/renewal/visits.hpp"
#include "phantom/util/csv.hpp"
#include "phantom/util/error.hpp"
#include "phantom/util/parallel.hpp"

namespace phantom::cli {
namespace {

namespace fs = std::filesystem;
using core::ActionTrajectory;

std::vector<double> parse_doubles(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const auto& part : split(text, ',')) out.push_back(parse_double(part, what));
  return out;
}

std::vector<std::size_t> parse_sizes(const std::string& text, const std::string& what) {
  std::vector<std::size_t> out;
  if (text.empty()) return out;
  for (const auto& part : split(text, ',')) {
    const long v = parse_long(part, what);
    require(v > 0, what + ": sizes must be positive");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::array<double, 3> parse_ratios(const std::string& text, const std::string& what) {
  const auto v = parse_doubles(text, what);
  require(v.size() == 3, what + ": expected three comma-separated values");
  return {v[0], v[1], v[2]};
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), "cannot write " + path.string());
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

std::vector<ActionTrajectory> load_data(const std::string& path) {
  require(fs::exists(path), "no such file: " + path);
  auto data = core::read_trajectories_file(path);
  require(!data.empty(), path + ": no trajectories");
  return data;
}

core::Window common_window(const std::vector<ActionTrajectory>& data, const std::string& source) {
  const core::Window w = data.front().window();
  for (const auto& t : data)
    require(t.window() == w, source + ": user '" + t.user_id + "' has a different window");
  return w;
}

inference::SteeringModel load_model(const std::string& path) {
  require(fs::exists(path), "no such file: " + path);
  return inference::SteeringModel::from_checkpoint(ad::load_checkpoint(path));
}

std::string pct(std::size_t k, std::size_t n) {
  return format_fixed(n ? 100.0 * static_cast<double>(k) / static_cast<double>(n) : 0.0, 2);
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::size_t users = 1000;
  int model = 2;
  std::string proportions = "0.2,0.4,0.4";
  std::uint64_t seed = 1;
  int weeks_before = 5;
  int weeks_after = 5;
  bool require_day0_action = false;
  std::string out;
  std::string labels;
  std::string events;
  std::string action_type = "vote";
  long threshold = 600;
  std::string reference_monday = "2024-01-01";
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  core::CohortSpec spec;
  spec.users = a.users;
  spec.model = core::model_from_int(a.model);
  const auto p = parse_ratios(a.proportions, "--proportions");
  spec.proportions = p;
  spec.seed = a.seed;
  spec.window = core::Window::from_weeks(a.weeks_before, a.weeks_after);
  spec.beta = core::planted_beta(spec.window);
  spec.require_day0_action = a.require_day0_action;
  const core::Cohort cohort = core::simulate_cohort(spec);

  auto traj_out = open_out(a.out);
  core::write_trajectories(traj_out, cohort.trajectories);
  if (!a.labels.empty()) {
    auto lab = open_out(a.labels);
    core::write_labels(lab, cohort);
  }
  if (!a.events.empty()) {
    ingest::BadgeSpec badge;
    badge.action_type = a.action_type;
    badge.threshold = a.threshold;
    badge.window_weeks_before = a.weeks_before;
    badge.window_weeks_after = a.weeks_after;
    const auto exported =
        ingest::trajectories_to_events(cohort.trajectories, badge, ingest::parse_date(a.reference_monday));
    auto ev = open_out(a.events);
    ingest::write_events(ev, exported.events);
    out << "observed_until " << ingest::format_date(exported.observed_until) << '\n';
  }
  std::array<std::size_t, 3> counts{};
  for (auto l : cohort.labels) ++counts[static_cast<std::size_t>(l)];
  out << "users " << cohort.trajectories.size() << '\n';
  for (std::size_t c = 0; c < 3; ++c)
    out << core::to_string(static_cast<core::SteeringClass>(c)) << ' ' << counts[c] << '\n';
  return kExitOk;
}

// ------------------------------------------------------------------ ingest

struct IngestArgs {
  std::string events;
  std::string out;
  std::string action_type = "vote";
  long threshold = 600;
  int weeks_before = 5;
  int weeks_after = 5;
  std::string observed_until;
  std::string rejects;
  std::string rejections;
  std::string counts;
  std::string split_dir;
  std::string split = "0.6,0.2,0.2";
  std::uint64_t split_seed = 1;
};

int cmd_ingest(const IngestArgs& a, std::ostream& out) {
  ingest::BadgeSpec badge;
  badge.action_type = a.action_type;
  badge.threshold = a.threshold;
  badge.window_weeks_before = a.weeks_before;
  badge.window_weeks_after = a.weeks_after;
  badge.validate();
  require(fs::exists(a.events), "no such file: " + a.events);
  const auto parsed = ingest::read_events_file(a.events);
  std::optional<ingest::Date> until;
  if (!a.observed_until.empty()) until = ingest::parse_date(a.observed_until);
  const auto result = ingest::ingest_events(parsed.events, badge, until);

  auto traj_out = open_out(a.out);
  core::write_trajectories(traj_out, result.trajectories);
  {
    auto rej = open_out(a.rejects.empty() ? a.out + ".rejects.jsonl" : a.rejects);
    ingest::write_rejects(rej, parsed.rejects);
  }
  {
    auto rej = open_out(a.rejections.empty() ? a.out + ".rejections.jsonl" : a.rejections);
    ingest::write_rejections(rej, result.rejections);
  }
  if (!a.counts.empty()) {
    auto c = open_out(a.counts);
    ingest::write_daily_counts(c, ingest::daily_counts(parsed.events, a.action_type));
  }
  if (!a.split_dir.empty()) {
    const auto ratios = parse_ratios(a.split, "--split");
    std::vector<std::string> ids;
    std::map<std::string, const ActionTrajectory*> by_id;
    for (const auto& t : result.trajectories) {
      ids.push_back(t.user_id);
      by_id[t.user_id] = &t;
    }
    const ingest::Split s = ingest::split(ids, ratios, a.split_seed);
    const fs::path dir(a.split_dir);
    fs::create_directories(dir);
    write_text(dir / "split.json", ingest::split_manifest(s, ratios, a.split_seed).dump(1) + "\n");
    auto emit = [&](const std::vector<std::string>& part, const char* name) {
      std::vector<ActionTrajectory> rows;
      for (const auto& id : part) rows.push_back(*by_id.at(id));
      core::write_trajectories_file(dir / name, rows);
    };
    emit(s.train, "train.jsonl");
    emit(s.validation, "validation.jsonl");
    emit(s.test, "test.jsonl");
    out << "split " << s.train.size() << ' ' << s.validation.size() << ' ' << s.test.size() << '\n';
  }
  std::map<std::string, std::size_t> reasons;
  for (const auto& r : result.rejections) ++reasons[r.reason];
  out << "events " << parsed.events.size() << '\n';
  out << "rejected_lines " << parsed.rejects.size() << '\n';
  out << "trajectories " << result.trajectories.size() << '\n';
  out << "rejected_users " << result.rejections.size() << '\n';
  for (const auto& [reason, n] : reasons) out << "  " << reason << ' ' << n << '\n';
  out << "observed_until " << ingest::format_date(result.observed_until) << '\n';
  return kExitOk;
}

// ------------------------------------------------------------------- train

struct TrainArgs {
  std::string train;
  std::string validation;
  std::string checkpoint;
  std::string history;
  int model = 2;
  std::size_t latent_dim = 20;
  std::size_t flow_layers = 12;
  std::string encoder_hidden = "128,128";
  std::string decoder_hidden = "64,64";
  double lr = 0.001;
  std::size_t epochs = 500;
  std::size_t batch = 128;
  std::size_t patience = 20;
  std::uint64_t seed = 1;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const auto train_set = load_data(a.train);
  const auto validation_set = load_data(a.validation);
  inference::ModelConfig mc;
  mc.model = core::model_from_int(a.model);
  mc.latent_dim = a.latent_dim;
  mc.flow_layers = a.flow_layers;
  mc.encoder_hidden = parse_sizes(a.encoder_hidden, "--encoder-hidden");
  mc.decoder_hidden = parse_sizes(a.decoder_hidden, "--decoder-hidden");
  mc.window = common_window(train_set, a.train);
  require(common_window(validation_set, a.validation) == mc.window,
          "training and validation windows differ");
  mc.seed = a.seed;
  inference::SteeringModel model(mc);

  inference::TrainConfig tc;
  tc.epochs = a.epochs;
  tc.batch_size = a.batch;
  tc.patience = a.patience;
  tc.adam.lr = a.lr;
  tc.seed = a.seed;
  const auto result = inference::train(model, train_set, validation_set, tc);

  nlohmann::ordered_json extra;
  extra["best_epoch"] = result.best_epoch;
  extra["best_validation_elbo"] = result.best_validation_elbo;
  ad::save_checkpoint(a.checkpoint, model.checkpoint(extra));
  if (!a.history.empty()) {
    auto h = open_out(a.history);
    inference::write_history_csv(h, result.history);
  }
  out << "epochs " << result.history.size() << '\n';
  out << "best_epoch " << result.best_epoch << '\n';
  out << "best_validation_elbo " << format_fixed(result.best_validation_elbo, 6) << '\n';
  if (result.diverged) {
    err << "error: training diverged (" << result.divergence_message
        << "); last good parameters written to " << a.checkpoint << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}

// -------------------------------------------------------------- eval/classify

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string fits;
  std::string summary;
  std::string naive_train;
  std::uint64_t seed = 1;
  std::size_t n_mc = 64;
  std::size_t n_strength = 64;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto model = load_model(a.checkpoint);
  const auto data = load_data(a.data);
  require(common_window(data, a.data) == model.config().window, "data window does not match the checkpoint");
  inference::EvalConfig ec;
  ec.seed = a.seed;
  ec.n_mc = a.n_mc;
  ec.n_strength = a.n_strength;
  const auto report = inference::evaluate(model, data, ec);
  auto summary = inference::fit_summary(report);
  if (!a.naive_train.empty()) {
    const auto nb = inference::naive_baseline(load_data(a.naive_train));
    summary["naive"] = {{"log_likelihood", inference::naive_log_likelihood(nb, data)},
                        {"mse", inference::naive_mse(nb, data)}};
  }
  if (!a.fits.empty()) {
    auto f = open_out(a.fits);
    inference::write_fit_csv(f, report);
  }
  if (!a.summary.empty()) write_text(a.summary, summary.dump(1) + "\n");
  out << summary.dump(1) << '\n';
  return kExitOk;
}

struct ClassifyArgs {
  std::string checkpoint;
  std::string data;
  std::string out;
  std::string census;
  std::string beta;
  std::uint64_t seed = 1;
  std::size_t n_strength = 64;
};

int cmd_classify(const ClassifyArgs& a, std::ostream& out, std::ostream& err) {
  const auto model = load_model(a.checkpoint);
  const auto data = load_data(a.data);
  require(common_window(data, a.data) == model.config().window, "data window does not match the checkpoint");
  inference::EvalConfig ec;
  ec.seed = a.seed;
  ec.n_mc = 1;
  ec.n_strength = a.n_strength;
  const auto report = inference::evaluate(model, data, ec);
  const auto census = report.census();

  static constexpr std::array<const char*, 3> kRules{"(S1;S2)<(0.2;0.1)", "otherwise", "(S1;S2)>(0.3;0.3)"};
  std::ostringstream table;
  table << "group,rule,users,percent\n";
  for (std::size_t c = 0; c < 3; ++c)
    table << core::to_string(static_cast<core::SteeringClass>(c)) << ',' << kRules[c] << ',' << census[c] << ','
          << pct(census[c], report.users) << '\n';
  out << table.str();

  if (!a.out.empty()) {
    auto f = open_out(a.out);
    inference::write_fit_csv(f, report);
  }
  if (!a.census.empty()) write_text(a.census, table.str());
  if (!a.beta.empty()) {
    const double g = inference::beta_gradient_norm(model, data, a.seed);
    const auto beta = inference::extract_beta(model, inference::reference_profile(model), g);
    if (beta.identifiability_warning)
      err << "warning: deviation gradient norm " << format_exact(g)
          << " is below 1e-6; beta is not identifiable from this data\n";
    auto f = open_out(a.beta);
    inference::write_beta_csv(f, beta);
  }
  return kExitOk;
}

// -------------------------------------------------------------------- bump

struct BumpArgs {
  std::string dist;
  std::string schedule;
  std::string thresholds = "1000";
  std::size_t trials = 200000;
  std::uint64_t seed = 1;
  std::string start = "first";
  int visits = -1;
  std::string visits_out;
  std::string convergence_out;
  std::string trajectories;
  std::string groups;
  std::string curves_out;
};

int cmd_bump(const BumpArgs& a, std::ostream& out, std::ostream& err) {
  require(!(a.dist.empty() && a.schedule.empty() && a.trajectories.empty()),
          "bump needs --dist, --schedule or --trajectories");
  require(a.dist.empty() || a.schedule.empty(), "--dist and --schedule are mutually exclusive");
  if (!a.dist.empty() || !a.schedule.empty()) {
    renewal::WeeklySchedule schedule;
    double limit = 0.0;
    if (!a.dist.empty()) {
      const auto d = renewal::DiscreteDist::parse(a.dist);
      schedule.slots = {d};
      limit = renewal::expected_bump_limit(d);
    } else {
      schedule = renewal::WeeklySchedule::parse(a.schedule);
      limit = renewal::weekly_bump_limit(schedule);
    }
    std::vector<long> thresholds;
    for (const auto& t : split(a.thresholds, ',')) thresholds.push_back(parse_long(t, "--thresholds"));
    renewal::CrossingOptions base;
    base.trials = a.trials;
    base.seed = a.seed;
    require(a.start == "first" || a.start == "uniform", "--start must be 'first' or 'uniform'");
    base.start = a.start == "first" ? renewal::StartSlot::first : renewal::StartSlot::uniform;
    const auto rows = renewal::convergence_table(schedule, thresholds, base);
    std::ostringstream table;
    renewal::write_convergence_csv(table, rows);
    out << "analytic_limit " << format_fixed(limit, 12) << '\n' << table.str();
    if (!a.convergence_out.empty()) write_text(a.convergence_out, table.str());
    if (a.visits >= 0) {
      require(!a.dist.empty(), "--visits needs --dist");
      require(!a.visits_out.empty(), "--visits needs --visits-out");
      const auto p = renewal::visit_probabilities(renewal::DiscreteDist::parse(a.dist), a.visits);
      auto f = open_out(a.visits_out);
      renewal::write_visit_csv(f, p);
    }
  }
  if (!a.trajectories.empty()) {
    require(!a.curves_out.empty(), "--trajectories needs --curves-out");
    const auto data = load_data(a.trajectories);
    std::vector<core::SteeringClass> labels;
    if (!a.groups.empty()) {
      const CsvTable t = read_csv_file(a.groups);
      const std::size_t id_col = t.column("user_id"), label_col = t.column("label");
      std::map<std::string, core::SteeringClass> by_id;
      for (const auto& row : t.rows) by_id[row[id_col]] = core::steering_class_from_string(row[label_col]);
      for (const auto& traj : data) {
        const auto it = by_id.find(traj.user_id);
        require(it != by_id.end(), a.groups + ": no label for user '" + traj.user_id + "'");
        labels.push_back(it->second);
      }
    }
    const auto curves = renewal::centered_mean_curve(data, labels);
    for (const auto& w : curves.warnings) err << "warning: " << w << '\n';
    auto f = open_out(a.curves_out);
    renewal::write_curve_csv(f, curves);
    out << "day0_mean " << format_fixed(curves.at("all", 0), 6) << '\n';
  }
  return kExitOk;
}

// ------------------------------------------------------------------ report

struct ReportArgs {
  std::string curves;
  std::string fits;
  std::string convergence;
  std::string out_dir;
};

// Series in first-appearance order of `key_col`.
std::vector<Series> read_series(const CsvTable& t, const std::string& key_col, const std::string& x_col,
                                const std::string& y_col, const std::string& source) {
  const std::size_t k = t.column(key_col), x = t.column(x_col), y = t.column(y_col);
  std::vector<Series> out;
  for (const auto& row : t.rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const Series& s) { return s.name == row[k]; });
    if (it == out.end()) {
      out.push_back({row[k], {}});
      it = out.end() - 1;
    }
    it->points.emplace_back(parse_double(row[x], source + " " + x_col), parse_double(row[y], source + " " + y_col));
  }
  return out;
}

void summarize(std::ostream& o, const std::string& chart, const std::vector<Series>& series) {
  for (const auto& s : series) {
    double xl = 0, xh = 0, yl = 0, yh = 0;
    if (!s.points.empty()) {
      xl = xh = s.points.front().first;
      yl = yh = s.points.front().second;
      for (const auto& [x, y] : s.points) {
        xl = std::min(xl, x), xh = std::max(xh, x);
        yl = std::min(yl, y), yh = std::max(yh, y);
      }
    }
    o << chart << ',' << s.name << ',' << s.points.size() << ',' << format_fixed(xl, 6) << ',' << format_fixed(xh, 6)
      << ',' << format_fixed(yl, 6) << ',' << format_fixed(yh, 6) << '\n';
  }
}

int cmd_report(const ReportArgs& a, std::ostream& out) {
  require(!(a.curves.empty() && a.fits.empty() && a.convergence.empty()),
          "report needs at least one of --curves, --fits, --convergence");
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  std::ostringstream summary;
  summary << "chart,series,points,x_min,x_max,y_min,y_max\n";
  if (!a.curves.empty()) {
    const auto series = read_series(read_csv_file(a.curves), "group", "relative_day", "mean_count", a.curves);
    ChartSpec spec{"Mean number of actions per day", "days relative to badge", "mean actions", true, 0.0};
    write_text(dir / "curves.svg", line_chart(spec, series));
    summarize(summary, "curves", series);
    out << "wrote " << (dir / "curves.svg").string() << '\n';
  }
  if (!a.fits.empty()) {
    const CsvTable t = read_csv_file(a.fits);
    const std::size_t s1 = t.column("s1"), s2 = t.column("s2"), label = t.column("label");
    std::vector<Series> series{{"non-steerer", {}}, {"other", {}}, {"strong-steerer", {}}};
    for (const auto& row : t.rows) {
      const auto c = core::steering_class_from_string(row[label]);
      series[static_cast<std::size_t>(c)].points.emplace_back(parse_double(row[s1], a.fits + " s1"),
                                                              parse_double(row[s2], a.fits + " s2"));
    }
    ChartSpec spec{"Inferred steering strength", "S1 (activity)", "S2 (action count)", false, 0.0};
    write_text(dir / "strength.svg", scatter_chart(spec, series));
    summarize(summary, "strength", series);
    out << "wrote " << (dir / "strength.svg").string() << '\n';
  }
  if (!a.convergence.empty()) {
    const CsvTable t = read_csv_file(a.convergence);
    const std::size_t n = t.column("N"), mc = t.column("mc_mean"), lim = t.column("analytic_limit");
    std::vector<Series> series{{"mc_mean", {}}, {"analytic_limit", {}}};
    for (const auto& row : t.rows) {
      const double x = parse_double(row[n], a.convergence + " N");
      series[0].points.emplace_back(x, parse_double(row[mc], a.convergence + " mc_mean"));
      series[1].points.emplace_back(x, parse_double(row[lim], a.convergence + " analytic_limit"));
    }
    ChartSpec spec{"Crossing-day mean against threshold", "threshold N", "mean count on crossing day", false, 0.0};
    write_text(dir / "convergence.svg", line_chart(spec, series));
    summarize(summary, "convergence", series);
    out << "wrote " << (dir / "convergence.svg").string() << '\n';
  }
  write_text(dir / "summary.csv", summary.str());
  return kExitOk;
}

// ----------------------------------------------------------------- wiring

const std::array<const char*, 7> kCommands{"simulate", "ingest", "train", "eval", "classify", "bump", "report"};

// Moves `--config FILE` out of the argument list and splices its entries in
// right after the subcommand, so explicit flags (parsed later) win.
std::vector<std::string> expand_config(const std::vector<std::string>& args, CLI::App& app) {
  std::vector<std::string> rest;
  std::string config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      require(i + 1 < args.size(), "--config needs a file");
      config = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (config.empty()) return rest;
  const auto cmd = std::find_if(rest.begin(), rest.end(), [](const std::string& s) {
    return std::find(kCommands.begin(), kCommands.end(), s) != kCommands.end();
  });
  require(cmd != rest.end(), "--config needs a subcommand");
  CLI::App* sub = app.get_subcommand(*cmd);
  std::vector<std::string> injected;
  for (const auto& [key, value] : read_config_file(config)) {
    require(key != "config", config + ": 'config' cannot be set from a config file");
    const CLI::Option* opt = sub->get_option_no_throw("--" + key);
    require(opt != nullptr, config + ": unknown key '" + key + "' for command '" + *cmd + "'");
    injected.push_back("--" + key + "=" + value);
  }
  rest.insert(cmd + 1, injected.begin(), injected.end());
  return rest;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> read_config_file(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot read config file " + path.string());
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = path.string() + ":" + std::to_string(lineno);
    require(eq != std::string::npos, where + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    require(!key.empty(), where + ": empty key");
    std::replace(key.begin(), key.end(), '_', '-');
    out.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"phantom: badge steering models, phantom-bump analysis and data pipeline"};
  app.name("phantom");
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  unsigned threads = 0;
  std::string config_unused;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--threads", threads, "Worker thread cap (0 = all cores)")->capture_default_str();
    sub->add_option("--config", config_unused, "Flat key=value file; flags given on the command line override it");
  };

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Simulate a synthetic cohort from Model 0, 1 or 2");
  s->add_option("--users", sim.users, "Number of users")->capture_default_str();
  s->add_option("--model", sim.model, "Generative model (0, 1 or 2)")->capture_default_str();
  s->add_option("--proportions", sim.proportions, "Strong,non,other group shares")->capture_default_str();
  s->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  s->add_option("--weeks-before", sim.weeks_before, "Window weeks before the badge")->capture_default_str();
  s->add_option("--weeks-after", sim.weeks_after, "Window weeks after the badge")->capture_default_str();
  s->add_flag("--require-day0-action", sim.require_day0_action, "Redraw day 0 until it has an action");
  s->add_option("--out", sim.out, "Trajectory JSON-lines output")->required();
  s->add_option("--labels", sim.labels, "Planted labels CSV output");
  s->add_option("--events", sim.events, "Also export an event log that ingests back to the trajectories");
  s->add_option("--action-type", sim.action_type, "Action type of exported events")->capture_default_str();
  s->add_option("--threshold", sim.threshold, "Badge threshold of exported events")->capture_default_str();
  s->add_option("--reference-monday", sim.reference_monday, "Monday anchoring exported dates")
      ->capture_default_str();
  common(s);

  IngestArgs ing;
  auto* i = app.add_subcommand("ingest", "Turn an event log into badge-aligned trajectories");
  i->add_option("--events", ing.events, "Event JSON-lines input")->required();
  i->add_option("--out", ing.out, "Trajectory JSON-lines output")->required();
  i->add_option("--action-type", ing.action_type, "Qualifying action type")->capture_default_str();
  i->add_option("--threshold", ing.threshold, "Badge threshold")->capture_default_str();
  i->add_option("--weeks-before", ing.weeks_before, "Window weeks before the badge")->capture_default_str();
  i->add_option("--weeks-after", ing.weeks_after, "Window weeks after the badge")->capture_default_str();
  i->add_option("--observed-until", ing.observed_until, "Last observed date (default: latest event)");
  i->add_option("--rejects", ing.rejects, "Malformed-line record (default: <out>.rejects.jsonl)");
  i->add_option("--rejections", ing.rejections, "Rejected-user record (default: <out>.rejections.jsonl)");
  i->add_option("--counts", ing.counts, "Daily counts CSV output");
  i->add_option("--split-dir", ing.split_dir, "Write train/validation/test files and split.json here");
  i->add_option("--split", ing.split, "Train,validation,test ratios")->capture_default_str();
  i->add_option("--split-seed", ing.split_seed, "Split shuffle seed")->capture_default_str();
  common(i);

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Fit a steering model by maximizing the ELBO");
  t->add_option("--train", tr.train, "Training trajectories")->required();
  t->add_option("--validation", tr.validation, "Validation trajectories")->required();
  t->add_option("--checkpoint", tr.checkpoint, "Checkpoint output")->required();
  t->add_option("--history", tr.history, "Per-epoch history CSV output");
  t->add_option("--model", tr.model, "Model (0, 1 or 2)")->capture_default_str();
  t->add_option("--latent-dim", tr.latent_dim, "Latent dimension m")->capture_default_str();
  t->add_option("--flow-layers", tr.flow_layers, "Planar flow layers K")->capture_default_str();
  t->add_option("--encoder-hidden", tr.encoder_hidden, "Encoder hidden sizes")->capture_default_str();
  t->add_option("--decoder-hidden", tr.decoder_hidden, "Decoder hidden sizes")->capture_default_str();
  t->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str();
  t->add_option("--epochs", tr.epochs, "Maximum epochs")->capture_default_str();
  t->add_option("--batch", tr.batch, "Minibatch size")->capture_default_str();
  t->add_option("--patience", tr.patience, "Stagnant validation epochs before stopping (0 = never)")
      ->capture_default_str();
  t->add_option("--seed", tr.seed, "Random seed")->capture_default_str();
  common(t);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Held-out ELBO and MSE of a checkpoint");
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint input")->required();
  e->add_option("--data", ev.data, "Test trajectories")->required();
  e->add_option("--fits", ev.fits, "Per-user fit CSV output");
  e->add_option("--summary", ev.summary, "JSON summary output");
  e->add_option("--naive-train", ev.naive_train, "Training trajectories for the naive baseline");
  e->add_option("--seed", ev.seed, "Random seed")->capture_default_str();
  e->add_option("--n-mc", ev.n_mc, "ELBO samples per user")->capture_default_str();
  e->add_option("--n-strength", ev.n_strength, "Posterior samples for S")->capture_default_str();
  common(e);

  ClassifyArgs cl;
  auto* c = app.add_subcommand("classify", "Label users as non-steerer, other or strong-steerer");
  c->add_option("--checkpoint", cl.checkpoint, "Checkpoint input")->required();
  c->add_option("--data", cl.data, "Trajectories to classify")->required();
  c->add_option("--out", cl.out, "Per-user fit CSV output");
  c->add_option("--census", cl.census, "Census CSV output");
  c->add_option("--beta", cl.beta, "Recovered deviation CSV output");
  c->add_option("--seed", cl.seed, "Random seed")->capture_default_str();
  c->add_option("--n-strength", cl.n_strength, "Posterior samples for S")->capture_default_str();
  common(c);

  BumpArgs bu;
  auto* b = app.add_subcommand("bump", "Phantom-bump limits, Monte Carlo crossings and centered curves");
  b->add_option("--dist", bu.dist, "Daily distribution, e.g. 1:0.5,2:0.5");
  b->add_option("--schedule", bu.schedule, "Weekly schedule, slots separated by ';'");
  b->add_option("--thresholds", bu.thresholds, "Comma-separated thresholds N")->capture_default_str();
  b->add_option("--trials", bu.trials, "Monte Carlo trials per threshold")->capture_default_str();
  b->add_option("--seed", bu.seed, "Random seed")->capture_default_str();
  b->add_option("--start", bu.start, "Start slot: first or uniform")->capture_default_str();
  b->add_option("--visits", bu.visits, "Write p_0..p_M visit values for --dist");
  b->add_option("--visits-out", bu.visits_out, "Visit CSV output");
  b->add_option("--convergence-out", bu.convergence_out, "Convergence CSV output");
  b->add_option("--trajectories", bu.trajectories, "Trajectories for centered mean curves");
  b->add_option("--groups", bu.groups, "CSV with user_id,label columns grouping the curves");
  b->add_option("--curves-out", bu.curves_out, "Curve CSV output");
  common(b);

  ReportArgs re;
  auto* r = app.add_subcommand("report", "Static SVG charts from curve, fit and convergence CSVs");
  r->add_option("--curves", re.curves, "Curve CSV (relative_day,group,mean_count)");
  r->add_option("--fits", re.fits, "Fit CSV (user_id,elbo,s1,s2,label)");
  r->add_option("--convergence", re.convergence, "Convergence CSV (N,mc_mean,stderr,analytic_limit)");
  r->add_option("--out-dir", re.out_dir, "Output directory")->required();
  common(r);

  try {
    std::vector<std::string> argv;
    try {
      argv = expand_config(args, app);
    } catch (const InvalidArgument& ex) {
      err << "error: " << ex.what() << '\n';
      return kExitUsage;
    }
    std::reverse(argv.begin(), argv.end());
    app.parse(argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    set_max_threads(threads);
    if (s->parsed()) return cmd_simulate(sim, out);
    if (i->parsed()) return cmd_ingest(ing, out);
    if (t->parsed()) return cmd_train(tr, out, err);
    if (e->parsed()) return cmd_eval(ev, out);
    if (c->parsed()) return cmd_classify(cl, out, err);
    if (b->parsed()) return cmd_bump(bu, out, err);
    if (r->parsed()) return cmd_report(re, out);
  } catch (const NumericalError& ex) {
    err << "error: numerical failure: " << ex.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace phantom::cli
