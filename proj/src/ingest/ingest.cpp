#include "phantom/ingest/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>

#include "phantom/util/error.hpp"
#include "phantom/util/parallel.hpp"

namespace phantom::ingest {

using namespace std::chrono;

namespace {

int parse_fixed_int(std::string_view s, std::size_t pos, std::size_t len, std::string_view text) {
  int v = 0;
  const char* b = s.data() + pos;
  for (std::size_t i = 0; i < len; ++i)
    if (b[i] < '0' || b[i] > '9') throw InvalidArgument("malformed date '" + std::string(text) + "'");
  std::from_chars(b, b + len, v);
  return v;
}

}  // namespace

Date parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-')
    throw InvalidArgument("malformed date '" + std::string(text) + "' (expected YYYY-MM-DD)");
  const year_month_day ymd{year{parse_fixed_int(text, 0, 4, text)},
                           month{static_cast<unsigned>(parse_fixed_int(text, 5, 2, text))},
                           day{static_cast<unsigned>(parse_fixed_int(text, 8, 2, text))}};
  if (!ymd.ok()) throw InvalidArgument("invalid calendar date '" + std::string(text) + "'");
  return sys_days{ymd};
}

Date parse_timestamp_date(std::string_view text) {
  if (text.size() < 20 || text[10] != 'T' || text[13] != ':' || text[16] != ':')
    throw InvalidArgument("malformed timestamp '" + std::string(text) + "'");
  const Date date = parse_date(text.substr(0, 10));
  const int hh = parse_fixed_int(text, 11, 2, text);
  const int mm = parse_fixed_int(text, 14, 2, text);
  const int ss = parse_fixed_int(text, 17, 2, text);
  if (hh > 23 || mm > 59 || ss > 59) throw InvalidArgument("invalid time in '" + std::string(text) + "'");
  const std::string_view zone = text.substr(19);
  minutes offset{0};
  if (zone == "Z") {
  } else if (zone.size() == 6 && (zone[0] == '+' || zone[0] == '-') && zone[3] == ':') {
    const int oh = parse_fixed_int(zone, 1, 2, text);
    const int om = parse_fixed_int(zone, 4, 2, text);
    if (oh > 23 || om > 59) throw InvalidArgument("invalid offset in '" + std::string(text) + "'");
    offset = minutes{oh * 60 + om};
    if (zone[0] == '-') offset = -offset;
  } else {
    throw InvalidArgument("timestamp '" + std::string(text) + "' needs a Z or +HH:MM zone");
  }
  const sys_seconds local = date + hours{hh} + minutes{mm} + seconds{ss};
  return floor<days>(local - offset);
}

std::string format_date(Date d) {
  const year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

int weekday_of(Date d) { return static_cast<int>(weekday{d}.iso_encoding()) - 1; }

ParsedEvents read_events(std::istream& in) {
  ParsedEvents out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.is_object()) throw InvalidArgument("line is not a JSON object");
      auto text_field = [&](const char* key) -> std::string {
        if (!j.contains(key)) throw InvalidArgument(std::string("missing field '") + key + "'");
        if (!j.at(key).is_string()) throw InvalidArgument(std::string("field '") + key + "' is not a string");
        return j.at(key).get<std::string>();
      };
      Event e;
      e.user_id = text_field("user_id");
      if (e.user_id.empty()) throw InvalidArgument("empty user_id");
      e.action_type = text_field("action_type");
      if (j.contains("date")) {
        e.date = parse_date(text_field("date"));
      } else if (j.contains("timestamp")) {
        e.date = parse_timestamp_date(text_field("timestamp"));
      } else {
        throw InvalidArgument("missing field 'date'");
      }
      out.events.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      out.rejects.push_back({n, std::string("invalid JSON: ") + ex.what(), line});
    } catch (const InvalidArgument& ex) {
      out.rejects.push_back({n, ex.what(), line});
    }
  }
  return out;
}

ParsedEvents read_events_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open events file " + path.string());
  return read_events(in);
}

void write_events(std::ostream& out, const std::vector<Event>& events) {
  for (const auto& e : events) {
    nlohmann::ordered_json j;
    j["user_id"] = e.user_id;
    j["date"] = format_date(e.date);
    j["action_type"] = e.action_type;
    out << j.dump() << '\n';
  }
}

void write_rejects(std::ostream& out, const std::vector<Reject>& rejects) {
  for (const auto& r : rejects) {
    nlohmann::ordered_json j;
    j["line"] = r.line;
    j["reason"] = r.reason;
    j["text"] = r.text;
    out << j.dump() << '\n';
  }
}

void BadgeSpec::validate() const {
  require(!action_type.empty(), "badge action_type must not be empty");
  require(threshold >= 1, "badge threshold must be at least 1");
  require(window_weeks_before > 0 && window_weeks_after > 0, "badge window weeks must be positive");
}

UserCounts daily_counts(const std::vector<Event>& events, const std::string& action_type) {
  UserCounts out;
  for (const auto& e : events)
    if (e.action_type == action_type) ++out[e.user_id][e.date];
  return out;
}

void write_daily_counts(std::ostream& out, const UserCounts& counts) {
  out << "user_id,date,count\n";
  for (const auto& [user, days] : counts)
    for (const auto& [date, c] : days) out << user << ',' << format_date(date) << ',' << c << '\n';
}

std::optional<Date> badge_day(const DailyCounts& counts, const BadgeSpec& spec) {
  long total = 0;
  for (const auto& [date, c] : counts) {
    total += c;
    if (total >= spec.threshold) return date;
  }
  return std::nullopt;
}

Extraction extract_window(const std::string& user_id, const DailyCounts& counts, Date badge,
                          const BadgeSpec& spec, Date observed_until) {
  spec.validate();
  const core::Window w = spec.window();
  const Date first = badge - days{w.day0_index};
  const Date last = first + days{w.length - 1};
  Extraction out;
  if (counts.empty() || counts.begin()->first > first) {
    out.rejection = Rejection{user_id, std::string(kInsufficientPre),
                              "history starts " + (counts.empty() ? std::string("never") : format_date(counts.begin()->first)) +
                                  ", window starts " + format_date(first)};
    return out;
  }
  if (observed_until < last) {
    out.rejection = Rejection{user_id, std::string(kInsufficientPost),
                              "log ends " + format_date(observed_until) + ", window ends " + format_date(last)};
    return out;
  }
  core::ActionTrajectory t;
  t.user_id = user_id;
  t.day0_index = w.day0_index;
  t.weekday_of_day0 = weekday_of(badge);
  t.counts.assign(static_cast<std::size_t>(w.length), 0);
  for (auto it = counts.lower_bound(first); it != counts.end() && it->first <= last; ++it)
    t.counts[static_cast<std::size_t>((it->first - first).count())] = it->second;
  out.trajectory = std::move(t);
  return out;
}

IngestResult ingest_events(const std::vector<Event>& events, const BadgeSpec& spec, std::optional<Date> observed_until) {
  spec.validate();
  IngestResult out;
  if (observed_until) {
    out.observed_until = *observed_until;
  } else if (!events.empty()) {
    out.observed_until = std::max_element(events.begin(), events.end(), [](const Event& a, const Event& b) {
                           return a.date < b.date;
                         })->date;
  }
  const UserCounts counts = daily_counts(events, spec.action_type);
  std::vector<const UserCounts::value_type*> users;
  for (const auto& entry : counts) users.push_back(&entry);
  std::vector<Extraction> results(users.size());
  parallel_for(users.size(), 256, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& [user, days] = *users[i];
      const auto badge = badge_day(days, spec);
      if (!badge) {
        results[i].rejection = Rejection{user, std::string(kNoBadge),
                                         "threshold " + std::to_string(spec.threshold) + " never reached"};
      } else {
        results[i] = extract_window(user, days, *badge, spec, out.observed_until);
      }
    }
  });
  for (auto& r : results) {
    if (r.trajectory) out.trajectories.push_back(std::move(*r.trajectory));
    if (r.rejection) out.rejections.push_back(std::move(*r.rejection));
  }
  return out;
}

void write_rejections(std::ostream& out, const std::vector<Rejection>& rejections) {
  for (const auto& r : rejections) {
    nlohmann::ordered_json j;
    j["user_id"] = r.user_id;
    j["reason"] = r.reason;
    j["detail"] = r.detail;
    out << j.dump() << '\n';
  }
}

Split split(std::vector<std::string> users, std::array<double, 3> ratios, std::uint64_t seed) {
  double total = 0.0;
  for (double r : ratios) {
    require(r >= 0.0 && std::isfinite(r), "split ratios must be nonnegative");
    total += r;
  }
  require(std::abs(total - 1.0) <= 1e-9, "split ratios must sum to 1");
  std::sort(users.begin(), users.end());
  require(std::adjacent_find(users.begin(), users.end()) == users.end(), "split: duplicate user ids");
  std::mt19937_64 rng(seed);
  std::shuffle(users.begin(), users.end(), rng);
  const double n = static_cast<double>(users.size());
  const auto n_train = static_cast<std::size_t>(std::llround(ratios[0] * n));
  const auto n_val = std::min(users.size() - n_train, static_cast<std::size_t>(std::llround(ratios[1] * n)));
  Split s;
  s.train.assign(users.begin(), users.begin() + static_cast<long>(n_train));
  s.validation.assign(users.begin() + static_cast<long>(n_train), users.begin() + static_cast<long>(n_train + n_val));
  s.test.assign(users.begin() + static_cast<long>(n_train + n_val), users.end());
  return s;
}

nlohmann::ordered_json split_manifest(const Split& s, std::array<double, 3> ratios, std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["format"] = "phantom-split";
  j["version"] = 1;
  j["seed"] = seed;
  j["ratios"] = ratios;
  j["train"] = s.train;
  j["validation"] = s.validation;
  j["test"] = s.test;
  return j;
}

Split split_from_manifest(const nlohmann::ordered_json& j) {
  try {
    require(j.value("format", "") == "phantom-split", "not a split manifest");
    require(j.at("version").get<int>() == 1, "unsupported split manifest version");
    Split s;
    s.train = j.at("train").get<std::vector<std::string>>();
    s.validation = j.at("validation").get<std::vector<std::string>>();
    s.test = j.at("test").get<std::vector<std::string>>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed split manifest: ") + e.what());
  }
}

EventExport trajectories_to_events(const std::vector<core::ActionTrajectory>& trajectories,
                                   const BadgeSpec& spec, Date reference_monday) {
  spec.validate();
  require(weekday_of(reference_monday) == 0, "reference date must be a Monday");
  const core::Window w = spec.window();
  EventExport out;
  out.observed_until = reference_monday;
  for (const auto& t : trajectories) {
    t.validate();
    require(t.window() == w, "trajectory " + t.user_id + " does not match the badge window");
    long pre = 0;
    for (int d = 0; d < w.day0_index; ++d) pre += t.counts[static_cast<std::size_t>(d)];
    const long history = spec.threshold - 1 - pre;
    require(history >= 1, "trajectory " + t.user_id + " reaches the threshold before day 0");
    require(t.counts[static_cast<std::size_t>(w.day0_index)] >= 1 &&
                pre + t.counts[static_cast<std::size_t>(w.day0_index)] + history >= spec.threshold,
            "trajectory " + t.user_id + " does not cross the threshold on day 0");
    const Date day0 = reference_monday + days{t.weekday_of_day0};
    const Date first = day0 - days{w.day0_index};
    for (long i = 0; i < history; ++i) out.events.push_back({t.user_id, first - days{1}, spec.action_type});
    for (int d = 0; d < w.length; ++d)
      for (int k = 0; k < t.counts[static_cast<std::size_t>(d)]; ++k)
        out.events.push_back({t.user_id, first + days{d}, spec.action_type});
    out.observed_until = std::max(out.observed_until, first + days{w.length - 1});
  }
  return out;
}

}  // namespace phantom::ingest
