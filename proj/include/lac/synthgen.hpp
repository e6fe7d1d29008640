#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "lac/activity.hpp"
#include "lac/civil_time.hpp"

namespace lac {

/// Parameters of the synthetic organization.
struct GenConfig {
  std::size_t employee_count = 40;
  std::size_t community_count = 4;
  std::size_t day_count = 60;  // working days, weekends skipped
  std::size_t anomaly_count = 2;
  double intra_email_prob = 0.3;
  double inter_email_prob = 0.03;
  std::uint64_t rng_seed = 1;
  CivilDate start_date{2010, 1, 4};

  /// Throws UsageError naming the first violated constraint.
  void validate() const;
};

enum class AnomalyArchetype { off_hours_session, removable_exfiltration, upload_burst };

std::string_view archetype_name(AnomalyArchetype a);

struct AnomalyDay {
  CivilDate date;
  std::vector<int> codes;  // injected activity codes, in time order

  friend bool operator==(const AnomalyDay&, const AnomalyDay&) = default;
};

struct AnomalyWindow {
  AnomalyArchetype archetype = AnomalyArchetype::off_hours_session;
  std::vector<AnomalyDay> days;

  std::size_t event_count() const;

  friend bool operator==(const AnomalyWindow&, const AnomalyWindow&) = default;
};

struct GroundTruth {
  std::set<std::string> anomalous_employee_ids;
  std::map<std::string, std::size_t> planted_partition;
  std::map<std::string, AnomalyWindow> anomaly_windows;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

/// Minimum number of injected events per anomalous employee.
inline constexpr std::size_t kMinInjectedEvents = 20;
/// Length of each anomaly window in working days.
inline constexpr std::size_t kAnomalyWindowDays = 10;

inline constexpr std::string_view kInternalDomain = "dtaa.test";

std::string employee_id(std::size_t index);  // EMP0000
std::string pc_id(std::size_t index);        // PC-0000
std::string email_address(std::size_t index);

struct GeneratedDataset {
  /// Full CSV text (header + rows) of each file.
  std::map<SourceKind, std::string> files;
  std::map<SourceKind, std::size_t> row_counts;
  GroundTruth truth;
};

GeneratedDataset generate_dataset(const GenConfig& config);

/// Writes the five CSV files and `answers.json` into `dir` (created if needed).
void write_dataset(const GeneratedDataset& data, const std::filesystem::path& dir);

inline constexpr int kAnswerFormatVersion = 1;
void write_answer_file(const GroundTruth& truth, const std::filesystem::path& path);
GroundTruth read_answer_file(const std::filesystem::path& path);

}  // namespace lac
