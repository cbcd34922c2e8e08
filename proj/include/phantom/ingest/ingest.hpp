#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "phantom/core/types.hpp"

namespace phantom::ingest {

using Date = std::chrono::sys_days;

/// Strict YYYY-MM-DD.
Date parse_date(std::string_view text);
/// "YYYY-MM-DDTHH:MM:SS" followed by "Z" or "+HH:MM"/"-HH:MM"; returns the UTC date.
Date parse_timestamp_date(std::string_view text);
std::string format_date(Date d);
/// 0 = Monday .. 6 = Sunday.
int weekday_of(Date d);

struct Event {
  std::string user_id;
  Date date;
  std::string action_type;
  friend bool operator==(const Event&, const Event&) = default;
};

/// Input line that could not be turned into an Event.
struct Reject {
  std::size_t line = 0;
  std::string reason;
  std::string text;
};

struct ParsedEvents {
  std::vector<Event> events;
  std::vector<Reject> rejects;
};

/// JSON lines {"user_id", "date", "action_type"}; "timestamp" may replace
/// "date". Blank lines are skipped; anything else malformed becomes a Reject.
ParsedEvents read_events(std::istream& in);
ParsedEvents read_events_file(const std::filesystem::path& path);
void write_events(std::ostream& out, const std::vector<Event>& events);
void write_rejects(std::ostream& out, const std::vector<Reject>& rejects);

struct BadgeSpec {
  std::string action_type = "vote";
  long threshold = 600;
  int window_weeks_before = 5;
  int window_weeks_after = 5;

  core::Window window() const { return core::Window::from_weeks(window_weeks_before, window_weeks_after); }
  void validate() const;
};

using DailyCounts = std::map<Date, int>;
using UserCounts = std::map<std::string, DailyCounts>;

/// Per-user counts of events of `action_type` per calendar day. Days without
/// events are absent (read as zero).
UserCounts daily_counts(const std::vector<Event>& events, const std::string& action_type);
/// CSV user_id,date,count in user then date order.
void write_daily_counts(std::ostream& out, const UserCounts& counts);

/// First date on which the cumulative count reaches the threshold.
std::optional<Date> badge_day(const DailyCounts& counts, const BadgeSpec& spec);

inline constexpr std::string_view kNoBadge = "no_badge";
inline constexpr std::string_view kInsufficientPre = "insufficient_pre_window";
inline constexpr std::string_view kInsufficientPost = "insufficient_post_window";

struct Rejection {
  std::string user_id;
  std::string reason;
  std::string detail;
};

struct Extraction {
  std::optional<core::ActionTrajectory> trajectory;
  std::optional<Rejection> rejection;
};

/// Cuts the window around `badge`. History must start on or before the first
/// window day, and the log must be observed through the last window day.
Extraction extract_window(const std::string& user_id, const DailyCounts& counts, Date badge,
                          const BadgeSpec& spec, Date observed_until);

struct IngestResult {
  std::vector<core::ActionTrajectory> trajectories;  // user_id order
  std::vector<Rejection> rejections;                  // user_id order
  Date observed_until{};
};

/// daily_counts + badge_day + extract_window for every user. `observed_until`
/// defaults to the latest event date in the log.
IngestResult ingest_events(const std::vector<Event>& events, const BadgeSpec& spec,
                    std::optional<Date> observed_until = std::nullopt);
void write_rejections(std::ostream& out, const std::vector<Rejection>& rejections);

struct Split {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

/// Sorts ids, shuffles with the seed, and cuts at rounded ratio boundaries.
Split split(std::vector<std::string> users, std::array<double, 3> ratios, std::uint64_t seed);

nlohmann::ordered_json split_manifest(const Split& s, std::array<double, 3> ratios, std::uint64_t seed);
Split split_from_manifest(const nlohmann::ordered_json& j);

struct EventExport {
  std::vector<Event> events;
  Date observed_until{};
};

/// Serializes aligned trajectories as an event log that ingests back to the
/// same trajectories: each user gets a history day just before the window
/// carrying threshold - 1 - (window actions before day 0) events, and day 0
/// falls on a date with the trajectory's weekday.
EventExport trajectories_to_events(const std::vector<core::ActionTrajectory>& trajectories,
                                   const BadgeSpec& spec, Date reference_monday);

}  // namespace phantom::ingest
