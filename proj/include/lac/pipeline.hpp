#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "lac/features.hpp"
#include "lac/logparse.hpp"
#include "lac/neural.hpp"

namespace lac {

inline constexpr double kTrainFraction = 0.70;
inline constexpr std::size_t kMinSequenceLength = 10;

struct SequenceSplit {
  FeatureSequence train;
  FeatureSequence test;
};

/// floor(0.7 T) in integer arithmetic, so 0.7 * 10 does not become 6.
constexpr std::size_t split_point(std::size_t t) { return t * 7 / 10; }

/// Chronological prefix/suffix split at floor(0.7 T). Throws DataError for
/// T < kMinSequenceLength.
SequenceSplit split(const FeatureSequence& seq);

/// An employee left out of a stage, with the reason.
struct Exclusion {
  std::string employee;
  std::string reason;

  friend bool operator==(const Exclusion&, const Exclusion&) = default;
};

struct ModelHyper {
  nn::Architecture architecture;
  nn::TrainConfig train;
  std::uint64_t init_seed = 7;
};

/// Runs fn(0..count-1) on up to `threads` workers (0 = hardware
/// concurrency). The first exception is rethrown after all workers stop.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

std::filesystem::path model_path(const std::filesystem::path& dir, const std::string& employee);

struct TrainAllResult {
  std::map<std::string, std::filesystem::path> models;
  std::map<std::string, nn::TrainReport> reports;  // freshly trained only
  std::vector<Exclusion> excluded;                  // too few events
  std::vector<Exclusion> unmodelable;               // training diverged
  std::size_t trained = 0;
  std::size_t reused = 0;
  double wall_seconds = 0.0;
};

/// Trains one model per eligible employee on the first 70% of its sequence
/// and saves it under `model_dir`. Models already on disk with the expected
/// architecture are reused, so an interrupted run can be resumed.
TrainAllResult train_all(const std::map<std::string, Timeline>& timelines,
                         const std::map<std::string, std::size_t>& partition,
                         const ModelHyper& hyper, const std::filesystem::path& model_dir,
                         std::size_t threads = 0);

/// Source of trained models; returns nullopt for employees without one.
class ModelRepository {
 public:
  virtual ~ModelRepository() = default;
  virtual std::optional<nn::AutoencoderModel> get(const std::string& employee) const = 0;
};

class DirectoryModels final : public ModelRepository {
 public:
  DirectoryModels(std::filesystem::path dir, nn::Architecture arch)
      : dir_(std::move(dir)), arch_(arch) {}
  std::optional<nn::AutoencoderModel> get(const std::string& employee) const override;

 private:
  std::filesystem::path dir_;
  nn::Architecture arch_;
};

class InMemoryModels final : public ModelRepository {
 public:
  void put(const std::string& employee, nn::AutoencoderModel model);
  std::optional<nn::AutoencoderModel> get(const std::string& employee) const override;

 private:
  std::map<std::string, nn::AutoencoderModel> models_;
};

/// MSE of the model's reconstruction of `test` (fresh state). Throws
/// DataError on an empty sequence.
double score_individual(const nn::AutoencoderModel& model, const FeatureSequence& test);

struct ScoreRecord {
  std::string employee;
  std::size_t community = 0;
  std::optional<double> individual_loss;  // own held-out 30%
  double community_loss = 0.0;            // own rows of the interleaved sequence
  double normalized_loss = 0.0;           // community_loss / community mean
  std::size_t rows = 0;

  friend bool operator==(const ScoreRecord&, const ScoreRecord&) = default;
};

struct ScoreOptions {
  /// When positive, each model is first trained this many epochs on the
  /// interleaved community sequence (a copy; stored models are untouched).
  std::size_t finetune_epochs = 0;
  nn::TrainConfig finetune;
  std::size_t threads = 0;
};

struct CommunityScores {
  std::vector<ScoreRecord> records;  // member order
  std::vector<Exclusion> unscored;
};

/// Interleaves the members once, runs every member's model over the whole
/// interleaved sequence and takes the MSE over that member's own rows.
CommunityScores score_in_community(const ModelRepository& models,
                                   std::span<const Timeline* const> members,
                                   std::size_t community, const ScoreOptions& options = {});

struct CommunityRanking {
  std::size_t community = 0;
  std::vector<ScoreRecord> ranked;  // descending normalized loss
  double mean_loss = 0.0;
  std::optional<double> normalized_std;  // population std, >= 2 members
  std::size_t flagged = 0;               // the first `flagged` of `ranked`

  friend bool operator==(const CommunityRanking&, const CommunityRanking&) = default;
};

struct GroundTruthComparison {
  std::set<std::string> anomalous;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  double precision = 0.0;
  double recall = 0.0;
  std::vector<std::string> missed;

  friend bool operator==(const GroundTruthComparison&, const GroundTruthComparison&) = default;
};

struct AnomalyReport {
  std::size_t k = 5;
  std::vector<CommunityRanking> communities;
  std::set<std::string> flagged;
  std::vector<Exclusion> excluded;
  std::vector<Exclusion> unscored;
  std::optional<GroundTruthComparison> ground_truth;

  friend bool operator==(const AnomalyReport&, const AnomalyReport&) = default;
};

/// Sorts each community by normalized loss (ties by employee id) and flags
/// the top K. Throws UsageError for K = 0.
AnomalyReport rank_and_flag(std::span<const ScoreRecord> records, std::size_t k);

/// Fills report.ground_truth against the known anomalous ids.
void compare_with_ground_truth(AnomalyReport& report, const std::set<std::string>& anomalous);

/// Scores a random cohort of `cohort_size` employees (the anomalous one plus
/// cohort_size - 1 drawn from the rest with `seed`) as one pseudo-community
/// labelled `label`.
AnomalyReport random_cohort_control(const std::map<std::string, Timeline>& timelines,
                                    const ModelRepository& models, std::size_t cohort_size,
                                    const std::string& anomalous_id, std::uint64_t seed,
                                    std::size_t k, const ScoreOptions& options = {},
                                    std::size_t label = 0);

/// The cohort chosen by random_cohort_control, sorted by id.
std::vector<std::string> choose_cohort(const std::map<std::string, Timeline>& timelines,
                                       std::size_t cohort_size, const std::string& anomalous_id,
                                       std::uint64_t seed);

inline constexpr int kReportFormatVersion = 1;
inline constexpr int kScoresFormatVersion = 1;

/// Writes `report.json` and one `plot_community_<c>.csv` per community.
void emit_report(const AnomalyReport& report, const std::filesystem::path& dir);
AnomalyReport read_report(const std::filesystem::path& path);

struct ScoreFile {
  std::vector<ScoreRecord> records;
  std::vector<Exclusion> excluded;
  std::vector<Exclusion> unscored;
};

void write_scores(const ScoreFile& scores, const std::filesystem::path& path);
ScoreFile read_scores(const std::filesystem::path& path);

/// Scores every community of `partition`: individual held-out loss plus
/// in-community loss for each modelled employee.
ScoreFile score_all(const std::map<std::string, Timeline>& timelines,
                    const std::map<std::string, std::size_t>& partition,
                    const ModelRepository& models, const ScoreOptions& options = {});

}  // namespace lac
