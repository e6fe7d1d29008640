#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "lac/pipeline.hpp"
#include "oracles.hpp"

#ifndef LAC_BINARY
#error "LAC_BINARY must name the lac executable"
#endif

namespace {

int run_lac(const std::string& args, const std::filesystem::path& log) {
  const std::string cmd = std::string(LAC_BINARY) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("exit codes") {
  const auto dir = oracle::scratch_dir("cli_codes");
  const auto log = dir / "log.txt";
  CHECK(run_lac("--help", log) == 0);
  CHECK(run_lac("", log) == 1);
  CHECK(run_lac("no-such-command", log) == 1);
  CHECK(run_lac("generate", log) == 1);  // --out missing
  CHECK(run_lac("generate --out " + (dir / "g").string() + " --inter 0.5 --intra 0.3", log) == 1);
  CHECK(slurp(log).find("inter_email_prob") != std::string::npos);
  CHECK(run_lac("ingest --dir " + (dir / "nowhere").string() + " --out " + (dir / "e.bin").string(), log) == 2);
  CHECK(run_lac("report --scores " + (dir / "missing.json").string() + " --out " + (dir / "r").string(), log) == 2);
  std::ofstream(dir / "bad.json") << "{\"k\": 0}";
  CHECK(run_lac("run-all --config " + (dir / "bad.json").string(), log) == 1);
  std::ofstream(dir / "unknown.json") << "{\"colour\": 1}";
  CHECK(run_lac("run-all --config " + (dir / "unknown.json").string(), log) == 1);
}

TEST_CASE("stage-by-stage commands on a tiny corpus") {
  const auto dir = oracle::scratch_dir("cli_stages");
  const auto log = dir / "log.txt";
  const std::string d = dir.string();
  REQUIRE(run_lac("generate --employees 6 --communities 2 --days 5 --anomalies 1 --seed 3 --out " + d + "/data", log) == 0);
  for (const char* f : {"email.csv", "file.csv", "http.csv", "device.csv", "logon.csv", "answers.json"})
    CHECK(std::filesystem::exists(dir / "data" / f));

  REQUIRE(run_lac("ingest --dir " + d + "/data --out " + d + "/events.bin", log) == 0);
  CHECK(slurp(log).find("logon.csv") != std::string::npos);

  REQUIRE(run_lac("communities --events " + d + "/events.bin --out " + d + "/partition.json --graph-out " + d +
                  "/edges.tsv --answers " + d + "/data/answers.json",
              log) == 0);
  CHECK(slurp(log).find("NMI") != std::string::npos);

  REQUIRE(run_lac("encode --events " + d + "/events.bin --employee EMP0000 --out " + d + "/seq.csv", log) == 0);
  {
    std::ifstream in(dir / "seq.csv");
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(std::count(line.begin(), line.end(), ',') == 21);
  }
  CHECK(run_lac("encode --events " + d + "/events.bin --employee NOBODY", log) == 2);

  const std::string train = "--events " + d + "/events.bin --partition " + d + "/partition.json --models " + d +
                            "/models --epochs 2 --threads 1";
  REQUIRE(run_lac("train " + train, log) == 0);
  CHECK(std::filesystem::exists(lac::model_path(dir / "models", "EMP0000")));

  REQUIRE(run_lac("score " + train + " --out " + d + "/scores.json", log) == 0);
  REQUIRE(run_lac("report --scores " + d + "/scores.json --out " + d + "/report --k 2 --answers " + d +
                  "/data/answers.json",
              log) == 0);
  const auto report = lac::read_report(dir / "report" / "report.json");
  CHECK(report.k == 2);
  CHECK(report.ground_truth.has_value());
  CHECK(run_lac("report --scores " + d + "/scores.json --out " + d + "/report0 --k 0", log) == 1);

  REQUIRE(run_lac("control --events " + d + "/events.bin --models " + d + "/models --anomaly EMP0001 --cohort 4 --seed 2 --k 1 --out " +
                  d + "/control",
              log) == 0);
  CHECK(lac::read_report(dir / "control" / "report.json").communities.at(0).ranked.size() == 4);
  CHECK(run_lac("control --events " + d + "/events.bin --models " + d + "/models --anomaly NOBODY --out " + d + "/c2", log) == 2);
}
