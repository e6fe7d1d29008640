#include "lac/run.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "lac/community.hpp"
#include "lac/error.hpp"
#include "lac/features.hpp"
#include "lac/logparse.hpp"

namespace lac {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Reads the keys of one JSON object, rejecting any key nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& object, std::string where) : object_(object), where_(std::move(where)) {
    if (!object_.is_object()) throw UsageError(where_ + ": expected an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    const auto it = object_.find(key);
    if (it == object_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw UsageError(where_ + "." + key + ": wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    const auto it = object_.find(key);
    return it == object_.end() || it->is_null() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [key, value] : object_.items()) {
      if (!seen_.count(key)) throw UsageError(where_ + ": unknown key '" + key + "'");
    }
  }

 private:
  const json& object_;
  std::string where_;
  std::set<std::string> seen_;
};

GenConfig read_gen_config(const json& j) {
  GenConfig g;
  ObjectReader r(j, "generate");
  r.read("employees", g.employee_count);
  r.read("communities", g.community_count);
  r.read("days", g.day_count);
  r.read("anomalies", g.anomaly_count);
  r.read("intra_email_prob", g.intra_email_prob);
  r.read("inter_email_prob", g.inter_email_prob);
  r.read("seed", g.rng_seed);
  std::string start;
  r.read("start_date", start);
  if (!start.empty()) {
    const auto date = parse_iso_date(start);
    if (!date) throw UsageError("generate.start_date: expected YYYY-MM-DD");
    g.start_date = *date;
  }
  r.finish();
  return g;
}

void read_model_config(const json& j, ModelHyper& h) {
  ObjectReader r(j, "model");
  r.read("epochs", h.train.epochs);
  r.read("min_improvement", h.train.min_improvement);
  r.read("patience", h.train.patience);
  r.read("chunk_length", h.train.chunk_length);
  r.read("chunk_threshold", h.train.chunk_threshold);
  r.read("learning_rate", h.train.adam.learning_rate);
  r.read("decay", h.train.adam.decay);
  r.read("init_seed", h.init_seed);
  if (const json* a = r.child("architecture")) {
    ObjectReader ar(*a, "model.architecture");
    ar.read("encoder_hidden", h.architecture.encoder_hidden);
    ar.read("encoder_projection", h.architecture.encoder_projection);
    ar.read("code_width", h.architecture.code_width);
    ar.read("decoder_projection", h.architecture.decoder_projection);
    ar.read("decoder_hidden", h.architecture.decoder_hidden);
    ar.finish();
  }
  r.finish();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

ordered_json exclusions_json(const std::vector<Exclusion>& list) {
  ordered_json arr = ordered_json::array();
  for (const auto& e : list) arr.push_back({{"employee", e.employee}, {"reason", e.reason}});
  return arr;
}

void write_json(const ordered_json& doc, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << doc.dump(2) << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace

void RunConfig::validate() const {
  if (generate) generate->validate();
  if (k == 0) throw UsageError("k must be at least 1");
  if (model.train.epochs == 0) throw UsageError("model.epochs must be at least 1");
  if (!(model.train.adam.learning_rate > 0.0)) throw UsageError("model.learning_rate must be positive");
  if (model.train.adam.decay < 0.0) throw UsageError("model.decay must be non-negative");
  const auto& a = model.architecture;
  if (a.input_width != kFeatureWidth) throw UsageError("model input width must be 22");
  if (a.encoder_hidden == 0 || a.encoder_projection == 0 || a.code_width == 0 ||
      a.decoder_projection == 0 || a.decoder_hidden == 0) {
    throw UsageError("model.architecture sizes must be positive");
  }
  if (control.enabled && control.cohort_size < 1) {
    throw UsageError("control.cohort_size must be at least 1");
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  const auto base = path.parent_path();
  RunConfig c;
  ObjectReader r(doc, "config");
  if (const json* g = r.child("generate")) c.generate = read_gen_config(*g);
  std::string data_dir, work_dir, answers;
  r.read("data_dir", data_dir);
  r.read("work_dir", work_dir);
  r.read("answers", answers);
  if (!data_dir.empty()) c.data_dir = resolve(base, data_dir);
  if (!work_dir.empty()) c.work_dir = resolve(base, work_dir);
  if (!answers.empty()) c.answers = resolve(base, answers);
  if (const json* m = r.child("model")) read_model_config(*m, c.model);
  r.read("k", c.k);
  r.read("threads", c.threads);
  r.read("community_finetune_epochs", c.community_finetune_epochs);
  if (const json* ctl = r.child("control")) {
    ObjectReader cr(*ctl, "control");
    cr.read("enabled", c.control.enabled);
    cr.read("cohort_size", c.control.cohort_size);
    cr.read("anomaly", c.control.anomaly);
    cr.read("seed", c.control.seed);
    cr.finish();
  }
  r.finish();
  c.validate();
  return c;
}

RunSummary run_all(const RunConfig& config) {
  config.validate();
  namespace fs = std::filesystem;
  const fs::path& work = config.work_dir;
  std::error_code ec;
  fs::create_directories(work, ec);
  if (ec) throw DataError("cannot create " + work.string() + ": " + ec.message());

  if (config.generate) write_dataset(generate_dataset(*config.generate), config.data_dir);

  std::optional<GroundTruth> truth;
  const fs::path answers = config.answers.value_or(config.data_dir / "answers.json");
  if (config.answers || fs::exists(answers)) truth = read_answer_file(answers);

  EventStore store = ingest_directory(config.data_dir);
  write_event_store(store, work / "events.bin");
  const auto timelines = build_timelines(store.events);
  if (timelines.empty()) throw DataError("no events in " + config.data_dir.string());

  RunSummary summary;
  summary.employees = timelines.size();

  std::set<std::string> ids;
  for (const auto& [id, t] : timelines) ids.insert(id);
  const FriendshipGraph graph = build_friendship_graph(store.emails, ids);
  const Partition partition = louvain(graph);
  summary.modularity = modularity(graph, partition);
  summary.communities = partition.community_count;
  write_partition(graph, partition, summary.modularity, work / "partition.json");
  write_edge_list(graph, work / "edges.tsv");
  std::map<std::string, std::size_t> assignment;
  for (std::size_t i = 0; i < graph.node_count(); ++i) {
    assignment[graph.node_ids()[i]] = partition.assignment[i];
  }
  if (truth && !truth->planted_partition.empty()) {
    std::vector<std::size_t> found, planted;
    for (const auto& [id, c] : assignment) {
      const auto it = truth->planted_partition.find(id);
      if (it == truth->planted_partition.end()) continue;
      found.push_back(c);
      planted.push_back(it->second);
    }
    if (!found.empty()) summary.nmi = normalized_mutual_information(found, planted);
  }

  summary.training = train_all(timelines, assignment, config.model, work / "models", config.threads);

  const DirectoryModels models(work / "models", config.model.architecture);
  ScoreOptions options;
  options.finetune_epochs = config.community_finetune_epochs;
  options.finetune = config.model.train;
  options.threads = config.threads;
  ScoreFile scores = score_all(timelines, assignment, models, options);
  for (const auto& e : summary.training.unmodelable) scores.unscored.push_back(e);
  write_scores(scores, work / "scores.json");

  summary.report = rank_and_flag(scores.records, config.k);
  summary.report.excluded = scores.excluded;
  summary.report.unscored = scores.unscored;
  if (truth) compare_with_ground_truth(summary.report, truth->anomalous_employee_ids);
  emit_report(summary.report, work / "report");

  if (config.control.enabled) {
    std::string anomaly = config.control.anomaly;
    if (anomaly.empty() && truth && !truth->anomalous_employee_ids.empty()) {
      anomaly = *truth->anomalous_employee_ids.begin();
    }
    if (!anomaly.empty()) {
      // Other known anomalies stay out of the cohort so the control measures
      // separation of one anomaly from normal behaviour.
      std::map<std::string, Timeline> population;
      for (const auto& [id, t] : timelines) {
        if (id == anomaly || !truth || !truth->anomalous_employee_ids.count(id)) {
          population.emplace(id, t);
        }
      }
      const std::size_t cohort = std::min(config.control.cohort_size, population.size());
      AnomalyReport control = random_cohort_control(population, models, cohort, anomaly,
                                                    config.control.seed, config.k, options);
      if (truth) compare_with_ground_truth(control, {anomaly});
      emit_report(control, work / "control");
      summary.control = std::move(control);
      summary.control_anomaly = anomaly;
    }
  }

  ordered_json doc;
  doc["format"] = "lac-summary";
  doc["version"] = 1;
  doc["employees"] = summary.employees;
  doc["communities"] = summary.communities;
  doc["modularity"] = summary.modularity;
  doc["nmi"] = summary.nmi ? ordered_json(*summary.nmi) : ordered_json();
  doc["models_trained"] = summary.training.models.size();
  doc["excluded"] = exclusions_json(summary.report.excluded);
  doc["unmodelable"] = exclusions_json(summary.training.unmodelable);
  doc["k"] = config.k;
  doc["flagged"] = summary.report.flagged;
  if (summary.report.ground_truth) {
    doc["recall"] = summary.report.ground_truth->recall;
    doc["false_positives"] = summary.report.ground_truth->false_positives;
  }
  if (summary.control) {
    const auto& ranked = summary.control->communities.front().ranked;
    std::size_t rank = 0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      if (ranked[i].employee == summary.control_anomaly) rank = i + 1;
    }
    doc["control"] = {{"anomaly", summary.control_anomaly},
                      {"cohort_size", ranked.size()},
                      {"anomaly_rank", rank}};
  }
  write_json(doc, work / "summary.json");

  ordered_json log;
  log["format"] = "lac-train-log";
  log["version"] = 1;
  log["total_wall_seconds"] = summary.training.wall_seconds;
  log["trained"] = summary.training.trained;
  log["reused"] = summary.training.reused;
  ordered_json per = ordered_json::object();
  for (const auto& [id, rep] : summary.training.reports) {
    per[id] = {{"epochs_run", rep.epochs_run},
               {"early_stopped", rep.early_stopped},
               {"diverged", rep.diverged},
               {"final_loss", rep.final_loss},
               {"wall_seconds", rep.wall_seconds},
               {"epoch_losses", rep.epoch_losses}};
  }
  log["employees"] = per;
  write_json(log, work / "train_log.json");
  return summary;
}

}  // namespace lac
