#include "phantom/core/trajectory_io.hpp"

#include <fstream>
#include <ostream>

#include "json.hpp"
#include "phantom/util/csv.hpp"
#include "phantom/util/error.hpp"

namespace phantom::core {

void write_trajectories(std::ostream& out, const std::vector<ActionTrajectory>& trajectories) {
  for (const auto& t : trajectories) {
    t.validate();
    nlohmann::ordered_json j;
    j["user_id"] = t.user_id;
    j["weekday_of_day0"] = t.weekday_of_day0;
    j["counts"] = t.counts;
    if (t.day0_index != static_cast<int>(t.counts.size() / 2)) j["day0_index"] = t.day0_index;
    out << j.dump() << '\n';
  }
}

std::vector<ActionTrajectory> read_trajectories(std::istream& in, const std::string& source) {
  std::vector<ActionTrajectory> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    try {
      const auto j = nlohmann::json::parse(line);
      ActionTrajectory t;
      t.user_id = j.at("user_id").get<std::string>();
      t.weekday_of_day0 = j.at("weekday_of_day0").get<int>();
      t.counts = j.at("counts").get<std::vector<int>>();
      t.day0_index = j.contains("day0_index") ? j.at("day0_index").get<int>()
                                              : static_cast<int>(t.counts.size() / 2);
      t.validate();
      out.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument(where + ": " + e.what());
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(where + ": " + e.what());
    }
  }
  return out;
}

void write_trajectories_file(const std::filesystem::path& path,
                             const std::vector<ActionTrajectory>& trajectories) {
  std::ofstream out(path);
  require(static_cast<bool>(out), "cannot write " + path.string());
  write_trajectories(out, trajectories);
}

std::vector<ActionTrajectory> read_trajectories_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot read " + path.string());
  return read_trajectories(in, path.string());
}

void write_labels(std::ostream& out, const Cohort& cohort) {
  out << "user_id,label,s1,s2\n";
  for (std::size_t i = 0; i < cohort.trajectories.size(); ++i)
    out << cohort.trajectories[i].user_id << ',' << to_string(cohort.labels[i]) << ','
        << format_fixed(cohort.strengths[i].s1, 6) << ',' << format_fixed(cohort.strengths[i].s2, 6)
        << '\n';
}

std::vector<LabelRecord> read_labels_file(const std::filesystem::path& path) {
  const CsvTable t = read_csv_file(path);
  const auto id = t.column("user_id"), label = t.column("label"), s1 = t.column("s1"),
             s2 = t.column("s2");
  std::vector<LabelRecord> out;
  for (const auto& row : t.rows)
    out.push_back({row[id], steering_class_from_string(row[label]),
                   {parse_double(row[s1], path.string()), parse_double(row[s2], path.string())}});
  return out;
}

}  // namespace phantom::core
