#include "lac/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

#include <nlohmann/json.hpp>

#include "lac/error.hpp"
#include "lac/random.hpp"

namespace lac {

namespace {

using nlohmann::ordered_json;

std::size_t resolve_threads(std::size_t threads, std::size_t work) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(threads, work));
}

// MSE of `output` against `target` over the given columns only.
double masked_mse(const Eigen::MatrixXd& output, const Eigen::MatrixXd& target,
                  std::span<const std::size_t> columns) {
  double sum = 0.0;
  for (std::size_t t : columns) {
    const auto c = static_cast<Eigen::Index>(t);
    sum += (output.col(c) - target.col(c)).squaredNorm();
  }
  return sum / static_cast<double>(columns.size() * static_cast<std::size_t>(target.rows()));
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

ordered_json exclusions_json(const std::vector<Exclusion>& list) {
  ordered_json arr = ordered_json::array();
  for (const auto& e : list) arr.push_back({{"employee", e.employee}, {"reason", e.reason}});
  return arr;
}

std::vector<Exclusion> exclusions_from(const nlohmann::json& arr) {
  std::vector<Exclusion> out;
  for (const auto& e : arr) {
    out.push_back({e.at("employee").get<std::string>(), e.at("reason").get<std::string>()});
  }
  return out;
}

ordered_json record_json(const ScoreRecord& r) {
  ordered_json j;
  j["employee"] = r.employee;
  j["community"] = r.community;
  j["individual_loss"] = r.individual_loss ? ordered_json(*r.individual_loss) : ordered_json();
  j["community_loss"] = r.community_loss;
  j["normalized_loss"] = r.normalized_loss;
  j["rows"] = r.rows;
  return j;
}

ScoreRecord record_from(const nlohmann::json& j) {
  ScoreRecord r;
  r.employee = j.at("employee").get<std::string>();
  r.community = j.at("community").get<std::size_t>();
  if (!j.at("individual_loss").is_null()) r.individual_loss = j.at("individual_loss").get<double>();
  r.community_loss = j.at("community_loss").get<double>();
  r.normalized_loss = j.at("normalized_loss").get<double>();
  r.rows = j.at("rows").get<std::size_t>();
  return r;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

nlohmann::json parse_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace

SequenceSplit split(const FeatureSequence& seq) {
  if (seq.size() < kMinSequenceLength) {
    throw DataError("sequence of " + std::to_string(seq.size()) + " rows is shorter than " +
                    std::to_string(kMinSequenceLength));
  }
  const std::size_t cut = split_point(seq.size());
  return SequenceSplit{seq.slice(0, cut), seq.slice(cut, seq.size())};
}

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  const std::size_t workers = resolve_threads(threads, count);
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::filesystem::path model_path(const std::filesystem::path& dir, const std::string& employee) {
  return dir / (employee + ".lacm");
}

TrainAllResult train_all(const std::map<std::string, Timeline>& timelines,
                         const std::map<std::string, std::size_t>& partition,
                         const ModelHyper& hyper, const std::filesystem::path& model_dir,
                         std::size_t threads) {
  const auto started = std::chrono::steady_clock::now();
  for (const auto& [id, timeline] : timelines) {
    if (!partition.count(id)) throw DataError("employee " + id + " missing from the partition");
  }
  std::error_code ec;
  std::filesystem::create_directories(model_dir, ec);
  if (ec) throw DataError("cannot create " + model_dir.string() + ": " + ec.message());

  TrainAllResult result;
  std::vector<const Timeline*> eligible;
  for (const auto& [id, timeline] : timelines) {
    if (timeline.events.size() < kMinSequenceLength) {
      result.excluded.push_back({id, "only " + std::to_string(timeline.events.size()) +
                                         " events (minimum " +
                                         std::to_string(kMinSequenceLength) + ")"});
    } else {
      eligible.push_back(&timeline);
    }
  }

  struct Outcome {
    bool reused = false;
    std::optional<nn::TrainReport> report;
  };
  std::vector<Outcome> outcomes(eligible.size());
  parallel_for(eligible.size(), threads, [&](std::size_t i) {
    const Timeline& timeline = *eligible[i];
    const auto path = model_path(model_dir, timeline.employee);
    if (std::filesystem::exists(path)) {
      try {
        nn::load_model(path, hyper.architecture);
        outcomes[i].reused = true;
        return;
      } catch (const DataError&) {
        // Unreadable or foreign model: retrain over it.
      }
    }
    const SequenceSplit parts = split(build_sequence(timeline));
    auto model = nn::AutoencoderModel::initialized(hyper.architecture, hyper.init_seed);
    nn::TrainReport report = nn::train(model, parts.train.to_matrix(), hyper.train);
    if (!report.diverged) {
      auto tmp = path;
      tmp += ".tmp";
      nn::save_model(model, tmp);
      std::filesystem::rename(tmp, path);
    }
    outcomes[i].report = std::move(report);
  });

  for (std::size_t i = 0; i < eligible.size(); ++i) {
    const std::string& id = eligible[i]->employee;
    if (outcomes[i].reused) {
      ++result.reused;
      result.models[id] = model_path(model_dir, id);
      continue;
    }
    const nn::TrainReport& report = *outcomes[i].report;
    if (report.diverged) {
      result.unmodelable.push_back({id, "training diverged: " + report.failure});
    } else {
      ++result.trained;
      result.models[id] = model_path(model_dir, id);
    }
    result.reports[id] = report;
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

std::optional<nn::AutoencoderModel> DirectoryModels::get(const std::string& employee) const {
  const auto path = model_path(dir_, employee);
  if (!std::filesystem::exists(path)) return std::nullopt;
  return nn::load_model(path, arch_);
}

void InMemoryModels::put(const std::string& employee, nn::AutoencoderModel model) {
  models_.insert_or_assign(employee, std::move(model));
}

std::optional<nn::AutoencoderModel> InMemoryModels::get(const std::string& employee) const {
  const auto it = models_.find(employee);
  if (it == models_.end()) return std::nullopt;
  return it->second;
}

double score_individual(const nn::AutoencoderModel& model, const FeatureSequence& test) {
  if (test.empty()) throw DataError("score_individual: empty test sequence");
  const Eigen::MatrixXd x = test.to_matrix();
  return nn::mse_loss(nn::reconstruct(model, x), x);
}

CommunityScores score_in_community(const ModelRepository& models,
                                   std::span<const Timeline* const> members,
                                   std::size_t community, const ScoreOptions& options) {
  CommunityScores out;
  if (members.empty()) return out;
  const FeatureSequence seq = interleave_community(members, "community " + std::to_string(community));
  const Eigen::MatrixXd x = seq.to_matrix();

  struct Slot {
    std::optional<ScoreRecord> record;
    std::optional<Exclusion> skipped;
  };
  std::vector<Slot> slots(members.size());
  parallel_for(members.size(), options.threads, [&](std::size_t i) {
    const std::string& id = members[i]->employee;
    const auto rows = seq.rows_of(id);
    if (rows.empty()) {
      slots[i].skipped = Exclusion{id, "no rows in the community sequence"};
      return;
    }
    auto model = models.get(id);
    if (!model) {
      slots[i].skipped = Exclusion{id, "no trained model"};
      return;
    }
    if (options.finetune_epochs > 0) {
      nn::TrainConfig cfg = options.finetune;
      cfg.epochs = options.finetune_epochs;
      const auto report = nn::train(*model, x, cfg);
      if (report.diverged) {
        slots[i].skipped = Exclusion{id, "community fine-tuning diverged: " + report.failure};
        return;
      }
    }
    const Eigen::MatrixXd y = nn::reconstruct(*model, x);
    ScoreRecord r;
    r.employee = id;
    r.community = community;
    r.community_loss = masked_mse(y, x, rows);
    r.rows = rows.size();
    slots[i].record = std::move(r);
  });

  for (auto& s : slots) {
    if (s.record) out.records.push_back(std::move(*s.record));
    if (s.skipped) out.unscored.push_back(std::move(*s.skipped));
  }
  double mean = 0.0;
  for (const auto& r : out.records) mean += r.community_loss;
  if (!out.records.empty()) mean /= static_cast<double>(out.records.size());
  for (auto& r : out.records) r.normalized_loss = mean > 0.0 ? r.community_loss / mean : 1.0;
  return out;
}

AnomalyReport rank_and_flag(std::span<const ScoreRecord> records, std::size_t k) {
  if (k == 0) throw UsageError("top-K budget must be at least 1");
  AnomalyReport report;
  report.k = k;
  std::map<std::size_t, std::vector<ScoreRecord>> groups;
  for (const auto& r : records) groups[r.community].push_back(r);
  for (auto& [community, group] : groups) {
    CommunityRanking ranking;
    ranking.community = community;
    std::sort(group.begin(), group.end(), [](const ScoreRecord& a, const ScoreRecord& b) {
      if (a.normalized_loss != b.normalized_loss) return a.normalized_loss > b.normalized_loss;
      return a.employee < b.employee;
    });
    double mean = 0.0, mean_norm = 0.0;
    for (const auto& r : group) {
      mean += r.community_loss;
      mean_norm += r.normalized_loss;
    }
    const double n = static_cast<double>(group.size());
    ranking.mean_loss = mean / n;
    mean_norm /= n;
    if (group.size() >= 2) {
      double var = 0.0;
      for (const auto& r : group) var += (r.normalized_loss - mean_norm) * (r.normalized_loss - mean_norm);
      ranking.normalized_std = std::sqrt(var / n);
    }
    ranking.flagged = std::min(k, group.size());
    for (std::size_t i = 0; i < ranking.flagged; ++i) report.flagged.insert(group[i].employee);
    ranking.ranked = std::move(group);
    report.communities.push_back(std::move(ranking));
  }
  return report;
}

void compare_with_ground_truth(AnomalyReport& report, const std::set<std::string>& anomalous) {
  GroundTruthComparison cmp;
  cmp.anomalous = anomalous;
  for (const auto& id : report.flagged) {
    if (anomalous.count(id)) {
      ++cmp.true_positives;
    } else {
      ++cmp.false_positives;
    }
  }
  for (const auto& id : anomalous) {
    if (!report.flagged.count(id)) {
      ++cmp.false_negatives;
      cmp.missed.push_back(id);
    }
  }
  cmp.precision = report.flagged.empty()
                      ? 0.0
                      : static_cast<double>(cmp.true_positives) / static_cast<double>(report.flagged.size());
  cmp.recall = anomalous.empty()
                   ? 1.0
                   : static_cast<double>(cmp.true_positives) / static_cast<double>(anomalous.size());
  report.ground_truth = std::move(cmp);
}

std::vector<std::string> choose_cohort(const std::map<std::string, Timeline>& timelines,
                                       std::size_t cohort_size, const std::string& anomalous_id,
                                       std::uint64_t seed) {
  if (!timelines.count(anomalous_id)) {
    throw DataError("anomalous employee " + anomalous_id + " is not in the population");
  }
  if (cohort_size == 0 || cohort_size > timelines.size()) {
    throw UsageError("cohort size " + std::to_string(cohort_size) + " must lie in [1, " +
                     std::to_string(timelines.size()) + "]");
  }
  std::vector<std::string> others;
  for (const auto& [id, t] : timelines) {
    if (id != anomalous_id) others.push_back(id);
  }
  Rng rng(derive_seed(seed, 0xc0));
  rng.shuffle(others);
  others.resize(cohort_size - 1);
  others.push_back(anomalous_id);
  std::sort(others.begin(), others.end());
  return others;
}

AnomalyReport random_cohort_control(const std::map<std::string, Timeline>& timelines,
                                    const ModelRepository& models, std::size_t cohort_size,
                                    const std::string& anomalous_id, std::uint64_t seed,
                                    std::size_t k, const ScoreOptions& options,
                                    std::size_t label) {
  const auto cohort = choose_cohort(timelines, cohort_size, anomalous_id, seed);
  std::vector<const Timeline*> members;
  for (const auto& id : cohort) members.push_back(&timelines.at(id));
  CommunityScores scores = score_in_community(models, members, label, options);
  AnomalyReport report = rank_and_flag(scores.records, k);
  report.unscored = std::move(scores.unscored);
  return report;
}

ScoreFile score_all(const std::map<std::string, Timeline>& timelines,
                    const std::map<std::string, std::size_t>& partition,
                    const ModelRepository& models, const ScoreOptions& options) {
  ScoreFile out;
  std::map<std::size_t, std::vector<const Timeline*>> communities;
  std::set<std::string> excluded;
  for (const auto& [id, timeline] : timelines) {
    const auto it = partition.find(id);
    if (it == partition.end()) throw DataError("employee " + id + " missing from the partition");
    communities[it->second].push_back(&timeline);
    if (timeline.events.size() < kMinSequenceLength) {
      out.excluded.push_back({id, "only " + std::to_string(timeline.events.size()) +
                                      " events (minimum " + std::to_string(kMinSequenceLength) +
                                      ")"});
      excluded.insert(id);
    }
  }

  // Individual held-out losses.
  std::vector<const Timeline*> all;
  for (const auto& [id, t] : timelines) {
    if (!excluded.count(id)) all.push_back(&t);
  }
  std::vector<std::optional<double>> individual(all.size());
  parallel_for(all.size(), options.threads, [&](std::size_t i) {
    if (auto model = models.get(all[i]->employee)) {
      individual[i] = score_individual(*model, split(build_sequence(*all[i])).test);
    }
  });
  std::map<std::string, double> individual_by_id;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (individual[i]) individual_by_id[all[i]->employee] = *individual[i];
  }

  for (const auto& [community, members] : communities) {
    CommunityScores scores = score_in_community(models, members, community, options);
    for (auto& r : scores.records) {
      if (const auto it = individual_by_id.find(r.employee); it != individual_by_id.end()) {
        r.individual_loss = it->second;
      }
      out.records.push_back(std::move(r));
    }
    for (auto& u : scores.unscored) {
      if (!excluded.count(u.employee)) out.unscored.push_back(std::move(u));
    }
  }
  return out;
}

void write_scores(const ScoreFile& scores, const std::filesystem::path& path) {
  ordered_json doc;
  doc["format"] = "lac-scores";
  doc["version"] = kScoresFormatVersion;
  ordered_json records = ordered_json::array();
  for (const auto& r : scores.records) records.push_back(record_json(r));
  doc["records"] = records;
  doc["excluded"] = exclusions_json(scores.excluded);
  doc["unscored"] = exclusions_json(scores.unscored);
  write_text(path, doc.dump(2) + "\n");
}

ScoreFile read_scores(const std::filesystem::path& path) {
  const auto doc = parse_json_file(path);
  try {
    if (doc.at("format") != "lac-scores" || doc.at("version").get<int>() != kScoresFormatVersion) {
      throw DataError(path.string() + ": not a version-1 scores file");
    }
    ScoreFile out;
    for (const auto& r : doc.at("records")) out.records.push_back(record_from(r));
    out.excluded = exclusions_from(doc.at("excluded"));
    out.unscored = exclusions_from(doc.at("unscored"));
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void emit_report(const AnomalyReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());

  ordered_json doc;
  doc["format"] = "lac-report";
  doc["version"] = kReportFormatVersion;
  doc["k"] = report.k;
  doc["normalization"] = "community_loss / community mean";
  ordered_json communities = ordered_json::array();
  for (const auto& c : report.communities) {
    ordered_json cj;
    cj["community"] = c.community;
    cj["scored"] = c.ranked.size();
    cj["flagged"] = c.flagged;
    cj["mean_loss"] = c.mean_loss;
    cj["normalized_std"] = c.normalized_std ? ordered_json(*c.normalized_std) : ordered_json();
    ordered_json ranked = ordered_json::array();
    for (std::size_t i = 0; i < c.ranked.size(); ++i) {
      ordered_json r = record_json(c.ranked[i]);
      r["rank"] = i + 1;
      r["flagged"] = i < c.flagged;
      ranked.push_back(r);
    }
    cj["ranking"] = ranked;
    communities.push_back(cj);
  }
  doc["communities"] = communities;
  doc["flagged"] = report.flagged;
  doc["excluded"] = exclusions_json(report.excluded);
  doc["unscored"] = exclusions_json(report.unscored);
  if (report.ground_truth) {
    const auto& g = *report.ground_truth;
    doc["ground_truth"] = {{"anomalous", g.anomalous},
                           {"true_positives", g.true_positives},
                           {"false_positives", g.false_positives},
                           {"false_negatives", g.false_negatives},
                           {"precision", g.precision},
                           {"recall", g.recall},
                           {"missed", g.missed}};
  } else {
    doc["ground_truth"] = nullptr;
  }
  write_text(dir / "report.json", doc.dump(2) + "\n");

  for (const auto& c : report.communities) {
    // id_index: position of the employee when the community is sorted by id,
    // i.e. the vertical axis of a loss-vs-employee scatter.
    std::vector<std::string> ids;
    for (const auto& r : c.ranked) ids.push_back(r.employee);
    std::sort(ids.begin(), ids.end());
    std::string csv =
        "id_index,employee,rank,community_loss,normalized_loss,individual_loss,flagged,"
        "ground_truth_anomalous\n";
    for (std::size_t i = 0; i < c.ranked.size(); ++i) {
      const auto& r = c.ranked[i];
      const auto index = std::lower_bound(ids.begin(), ids.end(), r.employee) - ids.begin();
      csv += std::to_string(index) + ',' + r.employee + ',' + std::to_string(i + 1) + ',' +
             format_double(r.community_loss) + ',' + format_double(r.normalized_loss) + ',' +
             (r.individual_loss ? format_double(*r.individual_loss) : std::string()) + ',' +
             (i < c.flagged ? "1" : "0") + ',' +
             (report.ground_truth ? (report.ground_truth->anomalous.count(r.employee) ? "1" : "0")
                                  : "") +
             '\n';
    }
    write_text(dir / ("plot_community_" + std::to_string(c.community) + ".csv"), csv);
  }
}

AnomalyReport read_report(const std::filesystem::path& path) {
  const auto doc = parse_json_file(path);
  try {
    if (doc.at("format") != "lac-report" || doc.at("version").get<int>() != kReportFormatVersion) {
      throw DataError(path.string() + ": not a version-1 report");
    }
    AnomalyReport report;
    report.k = doc.at("k").get<std::size_t>();
    for (const auto& cj : doc.at("communities")) {
      CommunityRanking c;
      c.community = cj.at("community").get<std::size_t>();
      c.flagged = cj.at("flagged").get<std::size_t>();
      c.mean_loss = cj.at("mean_loss").get<double>();
      if (!cj.at("normalized_std").is_null()) c.normalized_std = cj.at("normalized_std").get<double>();
      for (const auto& r : cj.at("ranking")) c.ranked.push_back(record_from(r));
      report.communities.push_back(std::move(c));
    }
    report.flagged = doc.at("flagged").get<std::set<std::string>>();
    report.excluded = exclusions_from(doc.at("excluded"));
    report.unscored = exclusions_from(doc.at("unscored"));
    if (!doc.at("ground_truth").is_null()) {
      const auto& g = doc.at("ground_truth");
      GroundTruthComparison cmp;
      cmp.anomalous = g.at("anomalous").get<std::set<std::string>>();
      cmp.true_positives = g.at("true_positives").get<std::size_t>();
      cmp.false_positives = g.at("false_positives").get<std::size_t>();
      cmp.false_negatives = g.at("false_negatives").get<std::size_t>();
      cmp.precision = g.at("precision").get<double>();
      cmp.recall = g.at("recall").get<double>();
      cmp.missed = g.at("missed").get<std::vector<std::string>>();
      report.ground_truth = std::move(cmp);
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace lac
