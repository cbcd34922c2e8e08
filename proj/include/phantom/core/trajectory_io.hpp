#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "phantom/core/model.hpp"
#include "phantom/core/types.hpp"

namespace phantom::core {

/// JSON lines, one user per line, fields in the order
/// {"user_id", "weekday_of_day0", "counts"}; "day0_index" is appended only
/// when it differs from counts.size() / 2.
void write_trajectories(std::ostream& out, const std::vector<ActionTrajectory>& trajectories);
std::vector<ActionTrajectory> read_trajectories(std::istream& in, const std::string& source = "<jsonl>");

void write_trajectories_file(const std::filesystem::path& path,
                             const std::vector<ActionTrajectory>& trajectories);
std::vector<ActionTrajectory> read_trajectories_file(const std::filesystem::path& path);

/// CSV: user_id,label,s1,s2 (planted ground truth of a synthetic cohort).
void write_labels(std::ostream& out, const Cohort& cohort);

struct LabelRecord {
  std::string user_id;
  SteeringClass label;
  SteeringStrength strength;
};
std::vector<LabelRecord> read_labels_file(const std::filesystem::path& path);

}  // namespace phantom::core
