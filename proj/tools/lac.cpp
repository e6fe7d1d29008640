// lac: command-line front end of the LSTM-autoencoder-with-community toolkit.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>

#include "lac/community.hpp"
#include "lac/error.hpp"
#include "lac/features.hpp"
#include "lac/logparse.hpp"
#include "lac/pipeline.hpp"
#include "lac/run.hpp"
#include "lac/synthgen.hpp"

namespace {

using namespace lac;

std::map<std::string, Timeline> load_timelines(const std::string& events) {
  return build_timelines(read_event_store(events).events);
}

std::set<std::string> anomalous_from(const std::string& answers) {
  if (answers.empty()) return {};
  return read_answer_file(answers).anomalous_employee_ids;
}

struct TrainFlags {
  std::optional<std::size_t> epochs;
  std::optional<double> min_improvement;
  std::optional<std::size_t> patience;
  std::optional<std::size_t> chunk_length;
  std::optional<std::size_t> chunk_threshold;
  std::optional<double> learning_rate;
  std::optional<double> decay;
  std::optional<std::uint64_t> init_seed;

  void add_to(CLI::App* app) {
    app->add_option("--epochs", epochs, "Epoch budget per model");
    app->add_option("--min-improvement", min_improvement, "Early-stop threshold on epoch loss");
    app->add_option("--patience", patience, "Epochs allowed below the threshold");
    app->add_option("--chunk-length", chunk_length, "Truncated BPTT chunk length");
    app->add_option("--chunk-threshold", chunk_threshold, "Sequences longer than this are chunked");
    app->add_option("--lr", learning_rate, "Adam learning rate");
    app->add_option("--decay", decay, "Time-based learning-rate decay");
    app->add_option("--init-seed", init_seed, "Weight initialization seed");
  }

  void apply(ModelHyper& h) const {
    if (epochs) h.train.epochs = *epochs;
    if (min_improvement) h.train.min_improvement = *min_improvement;
    if (patience) h.train.patience = *patience;
    if (chunk_length) h.train.chunk_length = *chunk_length;
    if (chunk_threshold) h.train.chunk_threshold = *chunk_threshold;
    if (learning_rate) h.train.adam.learning_rate = *learning_rate;
    if (decay) h.train.adam.decay = *decay;
    if (init_seed) h.init_seed = *init_seed;
  }
};

void print_report_summary(const AnomalyReport& report) {
  for (const auto& c : report.communities) {
    std::printf("community %zu: %zu scored, std %s\n", c.community, c.ranked.size(),
                c.normalized_std ? std::to_string(*c.normalized_std).c_str() : "n/a");
    for (std::size_t i = 0; i < c.flagged; ++i) {
      std::printf("  #%zu %s normalized %.6f\n", i + 1, c.ranked[i].employee.c_str(),
                  c.ranked[i].normalized_loss);
    }
  }
  if (report.ground_truth) {
    const auto& g = *report.ground_truth;
    std::printf("recall %.3f precision %.3f false positives %zu\n", g.recall, g.precision,
                g.false_positives);
  }
}

int run(int argc, char** argv) {
  CLI::App app{"LSTM autoencoder with community: insider-threat toolkit"};
  app.require_subcommand(1);

  // generate
  GenConfig gen;
  std::string gen_out;
  auto* generate = app.add_subcommand("generate", "Write a synthetic log corpus with ground truth");
  generate->add_option("--employees", gen.employee_count, "Number of employees");
  generate->add_option("--communities", gen.community_count, "Planted communities");
  generate->add_option("--days", gen.day_count, "Working days");
  generate->add_option("--anomalies", gen.anomaly_count, "Seeded anomalous employees");
  generate->add_option("--intra", gen.intra_email_prob, "Intra-community e-mail probability");
  generate->add_option("--inter", gen.inter_email_prob, "Inter-community e-mail probability");
  generate->add_option("--seed", gen.rng_seed, "Generator seed");
  generate->add_option("--out", gen_out, "Output directory")->required();

  // ingest
  std::string ingest_dir, ingest_out;
  auto* ingest = app.add_subcommand("ingest", "Parse the five log files into an event store");
  ingest->add_option("--dir", ingest_dir, "Directory holding the CSV files")->required();
  ingest->add_option("--out", ingest_out, "Event store path")->required();

  // communities
  std::string comm_events, comm_out, comm_graph, comm_answers;
  auto* communities = app.add_subcommand("communities", "Louvain communities of the e-mail graph");
  communities->add_option("--events", comm_events, "Event store")->required();
  communities->add_option("--out", comm_out, "Partition file")->required();
  communities->add_option("--graph-out", comm_graph, "Optional edge-list dump");
  communities->add_option("--answers", comm_answers, "Answer file, for NMI against planted labels");

  // encode
  std::string enc_events, enc_employee, enc_out;
  auto* encode = app.add_subcommand("encode", "Dump an employee's 22-column 0/1 feature rows");
  encode->add_option("--events", enc_events, "Event store")->required();
  encode->add_option("--employee", enc_employee, "Employee id")->required();
  encode->add_option("--out", enc_out, "Output file (default stdout)");

  // train
  std::string train_events, train_partition, train_models;
  std::size_t train_threads = 0;
  TrainFlags train_flags;
  auto* train = app.add_subcommand("train", "Train one autoencoder per employee");
  train->add_option("--events", train_events, "Event store")->required();
  train->add_option("--partition", train_partition, "Partition file")->required();
  train->add_option("--models", train_models, "Model directory")->required();
  train->add_option("--threads", train_threads, "Worker threads (0 = all cores)");
  train_flags.add_to(train);

  // score
  std::string score_events, score_partition, score_models, score_out;
  std::size_t score_threads = 0, finetune_epochs = 0;
  TrainFlags score_flags;
  auto* score = app.add_subcommand("score", "Individual and in-community reconstruction losses");
  score->add_option("--events", score_events, "Event store")->required();
  score->add_option("--partition", score_partition, "Partition file")->required();
  score->add_option("--models", score_models, "Model directory")->required();
  score->add_option("--out", score_out, "Scores file")->required();
  score->add_option("--threads", score_threads, "Worker threads (0 = all cores)");
  score->add_option("--community-finetune-epochs", finetune_epochs,
                    "Train each model on its community sequence first");
  score_flags.add_to(score);

  // report
  std::string report_scores, report_out, report_answers;
  std::size_t report_k = 5;
  auto* report = app.add_subcommand("report", "Rank, flag the top K and write plot data");
  report->add_option("--scores", report_scores, "Scores file")->required();
  report->add_option("--out", report_out, "Report directory")->required();
  report->add_option("--k", report_k, "Flag budget per community");
  report->add_option("--answers", report_answers, "Answer file for precision/recall");

  // control
  std::string ctl_events, ctl_models, ctl_anomaly, ctl_out, ctl_answers;
  std::size_t ctl_cohort = 20, ctl_k = 5, ctl_threads = 0;
  std::uint64_t ctl_seed = 1;
  auto* control = app.add_subcommand("control", "Score one anomaly inside a random cohort");
  control->add_option("--events", ctl_events, "Event store")->required();
  control->add_option("--models", ctl_models, "Model directory")->required();
  control->add_option("--anomaly", ctl_anomaly, "Employee pushed into the cohort")->required();
  control->add_option("--cohort", ctl_cohort, "Cohort size including the anomaly");
  control->add_option("--seed", ctl_seed, "Cohort selection seed");
  control->add_option("--k", ctl_k, "Flag budget");
  control->add_option("--out", ctl_out, "Report directory")->required();
  control->add_option("--answers", ctl_answers, "Answer file; other anomalies leave the pool");
  control->add_option("--threads", ctl_threads, "Worker threads (0 = all cores)");

  // run-all
  std::string ra_config;
  std::optional<std::string> ra_data, ra_work;
  std::optional<std::size_t> ra_k, ra_threads, ra_finetune, ra_cohort;
  std::optional<std::uint64_t> ra_seed;
  TrainFlags ra_flags;
  auto* run_all_cmd = app.add_subcommand("run-all", "Full pipeline from one config file");
  run_all_cmd->add_option("--config", ra_config, "JSON config")->required();
  run_all_cmd->add_option("--data-dir", ra_data, "Log directory");
  run_all_cmd->add_option("--work-dir", ra_work, "Output directory");
  run_all_cmd->add_option("--k", ra_k, "Flag budget per community");
  run_all_cmd->add_option("--threads", ra_threads, "Worker threads (0 = all cores)");
  run_all_cmd->add_option("--community-finetune-epochs", ra_finetune,
                          "Train each model on its community sequence first");
  run_all_cmd->add_option("--cohort", ra_cohort, "Random-cohort size");
  run_all_cmd->add_option("--seed", ra_seed, "Generator seed (when the config generates)");
  ra_flags.add_to(run_all_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::usage);
  }

  if (generate->parsed()) {
    const auto data = generate_dataset(gen);
    write_dataset(data, gen_out);
    for (const auto& [kind, rows] : data.row_counts) {
      std::printf("%s: %zu rows\n", std::string(source_file_name(kind)).c_str(), rows);
    }
  } else if (ingest->parsed()) {
    const EventStore store = ingest_directory(ingest_dir);
    write_event_store(store, ingest_out);
    for (const auto& [kind, stats] : store.stats) {
      std::printf("%s: %zu rows, %zu accepted, %zu skipped\n",
                  std::string(source_file_name(kind)).c_str(), stats.rows, stats.accepted,
                  stats.skipped);
      for (const auto& d : stats.diagnostics) {
        std::fprintf(stderr, "  line %zu: %s\n", d.line, d.reason.c_str());
      }
    }
  } else if (communities->parsed()) {
    const EventStore store = read_event_store(comm_events);
    std::set<std::string> ids;
    for (const auto& e : store.events) ids.insert(e.employee);
    const FriendshipGraph graph = build_friendship_graph(store.emails, ids);
    const Partition partition = louvain(graph);
    const double q = modularity(graph, partition);
    write_partition(graph, partition, q, comm_out);
    if (!comm_graph.empty()) write_edge_list(graph, comm_graph);
    std::printf("%zu employees, %zu communities, modularity %.6f\n", graph.node_count(),
                partition.community_count, q);
    if (!comm_answers.empty()) {
      const GroundTruth truth = read_answer_file(comm_answers);
      std::vector<std::size_t> found, planted;
      for (std::size_t i = 0; i < graph.node_count(); ++i) {
        const auto it = truth.planted_partition.find(graph.node_ids()[i]);
        if (it == truth.planted_partition.end()) continue;
        found.push_back(partition.assignment[i]);
        planted.push_back(it->second);
      }
      std::printf("NMI against planted communities: %.6f\n",
                  normalized_mutual_information(found, planted));
    }
  } else if (encode->parsed()) {
    const auto timelines = load_timelines(enc_events);
    const auto it = timelines.find(enc_employee);
    if (it == timelines.end()) throw DataError("no events for employee " + enc_employee);
    std::ofstream file;
    if (!enc_out.empty()) {
      file.open(enc_out, std::ios::binary | std::ios::trunc);
      if (!file) throw DataError("cannot write " + enc_out);
    }
    std::ostream& out = enc_out.empty() ? std::cout : file;
    const FeatureSequence seq = build_sequence(it->second);
    for (const FeatureVector& row : seq.rows) {
      const std::string bits = row.to_string();
      for (std::size_t b = 0; b < bits.size(); ++b) out << (b ? "," : "") << bits[b];
      out << '\n';
    }
  } else if (train->parsed()) {
    ModelHyper hyper;
    train_flags.apply(hyper);
    const auto timelines = load_timelines(train_events);
    const auto partition = read_partition(train_partition);
    const TrainAllResult result = train_all(timelines, partition, hyper, train_models, train_threads);
    std::printf("trained %zu, reused %zu, excluded %zu, unmodelable %zu in %.1f s\n",
                result.trained, result.reused, result.excluded.size(), result.unmodelable.size(),
                result.wall_seconds);
    for (const auto& e : result.excluded) std::printf("  excluded %s: %s\n", e.employee.c_str(), e.reason.c_str());
    for (const auto& e : result.unmodelable) std::printf("  unmodelable %s: %s\n", e.employee.c_str(), e.reason.c_str());
  } else if (score->parsed()) {
    ModelHyper hyper;
    score_flags.apply(hyper);
    const auto timelines = load_timelines(score_events);
    const auto partition = read_partition(score_partition);
    const DirectoryModels models(score_models, hyper.architecture);
    ScoreOptions options;
    options.finetune_epochs = finetune_epochs;
    options.finetune = hyper.train;
    options.threads = score_threads;
    const ScoreFile scores = score_all(timelines, partition, models, options);
    write_scores(scores, score_out);
    std::printf("scored %zu, excluded %zu, unscored %zu\n", scores.records.size(),
                scores.excluded.size(), scores.unscored.size());
  } else if (report->parsed()) {
    const ScoreFile scores = read_scores(report_scores);
    AnomalyReport result = rank_and_flag(scores.records, report_k);
    result.excluded = scores.excluded;
    result.unscored = scores.unscored;
    if (!report_answers.empty()) compare_with_ground_truth(result, anomalous_from(report_answers));
    emit_report(result, report_out);
    print_report_summary(result);
  } else if (control->parsed()) {
    auto timelines = load_timelines(ctl_events);
    for (const auto& id : anomalous_from(ctl_answers)) {
      if (id != ctl_anomaly) timelines.erase(id);
    }
    const DirectoryModels models(ctl_models, nn::Architecture{});
    ScoreOptions options;
    options.threads = ctl_threads;
    AnomalyReport result = random_cohort_control(timelines, models, ctl_cohort, ctl_anomaly,
                                                 ctl_seed, ctl_k, options);
    if (!ctl_answers.empty()) compare_with_ground_truth(result, {ctl_anomaly});
    emit_report(result, ctl_out);
    const auto& ranked = result.communities.front().ranked;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      if (ranked[i].employee == ctl_anomaly) {
        std::printf("%s ranks %zu of %zu (normalized %.6f)\n", ctl_anomaly.c_str(), i + 1,
                    ranked.size(), ranked[i].normalized_loss);
      }
    }
  } else if (run_all_cmd->parsed()) {
    RunConfig config = load_run_config(ra_config);
    if (ra_data) config.data_dir = *ra_data;
    if (ra_work) config.work_dir = *ra_work;
    if (ra_k) config.k = *ra_k;
    if (ra_threads) config.threads = *ra_threads;
    if (ra_finetune) config.community_finetune_epochs = *ra_finetune;
    if (ra_cohort) config.control.cohort_size = *ra_cohort;
    if (ra_seed) {
      if (!config.generate) throw UsageError("--seed needs a 'generate' section in the config");
      config.generate->rng_seed = *ra_seed;
    }
    ra_flags.apply(config.model);
    const RunSummary summary = run_all(config);
    std::printf("%zu employees, %zu communities, modularity %.6f", summary.employees,
                summary.communities, summary.modularity);
    if (summary.nmi) std::printf(", NMI %.6f", *summary.nmi);
    std::printf("\n");
    print_report_summary(summary.report);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const lac::Error& e) {
    std::fprintf(stderr, "lac: %s\n", e.what());
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "lac: %s\n", e.what());
    return static_cast<int>(lac::ExitCode::data);
  }
}
