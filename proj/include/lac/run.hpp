#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "lac/pipeline.hpp"
#include "lac/synthgen.hpp"

namespace lac {

struct ControlConfig {
  bool enabled = true;
  std::size_t cohort_size = 20;
  /// Employee pushed into the cohort; empty means the first seeded anomaly
  /// from the answer file.
  std::string anomaly;
  std::uint64_t seed = 1;
};

/// Everything `lac run-all` needs. Loaded from JSON; CLI flags override.
struct RunConfig {
  std::optional<GenConfig> generate;  // absent: use existing logs in data_dir
  std::filesystem::path data_dir = "data";
  std::filesystem::path work_dir = "work";
  std::optional<std::filesystem::path> answers;  // default data_dir/answers.json if present
  ModelHyper model;
  std::size_t k = 5;
  std::size_t threads = 0;
  std::size_t community_finetune_epochs = 0;
  ControlConfig control;

  void validate() const;
};

/// Throws UsageError for unknown keys or ill-typed values, DataError if the
/// file cannot be read or parsed.
RunConfig load_run_config(const std::filesystem::path& path);

struct RunSummary {
  std::size_t employees = 0;
  std::size_t communities = 0;
  double modularity = 0.0;
  std::optional<double> nmi;  // against the planted partition, when known
  AnomalyReport report;
  std::optional<AnomalyReport> control;
  std::string control_anomaly;
  TrainAllResult training;
};

/// Runs generate (optional), ingest, communities, train, score, report and
/// the random-cohort control, writing every artifact under work_dir:
/// events.bin, partition.json, edges.tsv, models/, scores.json, report/,
/// control/, summary.json and train_log.json (the only file with timings).
RunSummary run_all(const RunConfig& config);

}  // namespace lac
