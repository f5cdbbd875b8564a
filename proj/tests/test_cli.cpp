#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "gmva/io.hpp"

namespace fs = std::filesystem;

namespace {

struct CmdResult {
  int code = -1;
  std::string output;
};

std::string cli_path() {
  const char* env = std::getenv("GMVA_CLI");
  return env ? env : "";
}

CmdResult run_cli(const std::string& args) {
  CmdResult r;
  std::string cmd = cli_path() + " " + args + " 2>&1";
  std::FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[512];
  while (std::fgets(buf, sizeof(buf), p)) r.output += buf;
  int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const std::string kTinyNet = " --d 8 --heads 2 --tga-layers 1 --ffn 8 ";

}  // namespace

TEST_CASE("help exits zero on every subcommand", "[cli]") {
  REQUIRE_FALSE(cli_path().empty());
  CHECK(run_cli("--help").code == 0);
  for (const char* sub : {"simulate", "train", "associate", "sweep", "ablate", "report"}) {
    CmdResult r = run_cli(std::string(sub) + " --help");
    CHECK(r.code == 0);
    CHECK(r.output.find("--") != std::string::npos);
  }
  CHECK(run_cli("bogus-subcommand").code == 2);
}

TEST_CASE("simulate writes the scenario directory deterministically", "[cli]") {
  auto dir = fresh_dir("gmva_cli_sim");
  auto out1 = (dir / "s1").string();
  auto out2 = (dir / "s2").string();
  CmdResult r1 = run_cli("simulate --preset low --seed 1 --out " + out1);
  CHECK(r1.code == 0);
  CHECK(r1.output.find("10 vessels") != std::string::npos);
  for (const char* f : {"tracks_a.jsonl", "tracks_b.jsonl", "truth.json", "spec.json"})
    CHECK(fs::exists(fs::path(out1) / f));

  CHECK(run_cli("simulate --preset low --seed 1 --out " + out2).code == 0);
  for (const char* f : {"tracks_a.jsonl", "tracks_b.jsonl", "truth.json", "spec.json"})
    CHECK(gmva::read_text_file((fs::path(out1) / f).string()) ==
          gmva::read_text_file((fs::path(out2) / f).string()));

  // unwritable output path
  CHECK(run_cli("simulate --preset low --out /proc/nope/s").code == 2);
  fs::remove_all(dir);
}

TEST_CASE("simulate deletion flags shrink one modality", "[cli]") {
  auto dir = fresh_dir("gmva_cli_missing");
  auto out = (dir / "s").string();
  CHECK(run_cli("simulate --preset low --seed 3 --missing 4 --missing-modality A --out " + out)
            .code == 0);
  gmva::Scenario sc = gmva::load_scenario(out);
  CHECK(sc.tracks_a.size() == 6);
  CHECK(sc.tracks_b.size() == 10);
  CHECK(sc.deleted_ids.size() == 4);
  CHECK(sc.truth.pairs.size() == 6);
  fs::remove_all(dir);
}

TEST_CASE("train writes a checkpoint and a deterministic history", "[cli]") {
  auto dir = fresh_dir("gmva_cli_train");
  auto scen = (dir / "scen").string();
  CHECK(run_cli("simulate --preset low --seed 5 --vessels 4 --duration 300 --identity-camera "
                "--out " + scen).code == 0);

  auto run1 = (dir / "run1").string();
  auto run2 = (dir / "run2").string();
  const std::string train_args = "train --scenario " + scen + kTinyNet +
                                 "--epochs 3 --lr 0.001 --seed 7 --out ";
  CHECK(run_cli(train_args + run1).code == 0);
  CHECK(fs::exists(fs::path(run1) / "checkpoint.bin"));
  CHECK(fs::exists(fs::path(run1) / "checkpoint.json"));
  CHECK(fs::exists(fs::path(run1) / "history.csv"));
  CHECK(fs::exists(fs::path(run1) / "effective_config.json"));

  CHECK(run_cli(train_args + run2).code == 0);
  CHECK(gmva::read_text_file((fs::path(run1) / "history.csv").string()) ==
        gmva::read_text_file((fs::path(run2) / "history.csv").string()));
  CHECK(gmva::read_text_file((fs::path(run1) / "checkpoint.bin").string()) ==
        gmva::read_text_file((fs::path(run2) / "checkpoint.bin").string()));

  // zero learning rate: every epoch reports the same training loss
  auto flat = (dir / "flat").string();
  CHECK(run_cli("train --scenario " + scen + kTinyNet + "--epochs 3 --lr 0 --seed 7 --out " +
                flat).code == 0);
  auto hist = gmva::read_text_file((fs::path(flat) / "history.csv").string());
  std::stringstream ss(hist);
  std::string line, first_loss;
  std::getline(ss, line);  // header
  while (std::getline(ss, line)) {
    auto c1 = line.find(',');
    auto c2 = line.find(',', c1 + 1);
    std::string loss = line.substr(c1 + 1, c2 - c1 - 1);
    if (first_loss.empty()) first_loss = loss;
    CHECK(loss == first_loss);
  }

  // disabling both attention families is a usage error
  CHECK(run_cli("train --scenario " + scen + kTinyNet +
                "--epochs 1 --no-tga --no-sta --out " + (dir / "x").string()).code == 2);
  fs::remove_all(dir);
}

TEST_CASE("associate runs the model and the baselines", "[cli]") {
  auto dir = fresh_dir("gmva_cli_assoc");
  auto scen = (dir / "scen").string();
  CHECK(run_cli("simulate --preset low --seed 9 --vessels 4 --duration 300 --identity-camera "
                "--out " + scen).code == 0);
  auto run = (dir / "run").string();
  CHECK(run_cli("train --scenario " + scen + kTinyNet +
                "--epochs 2 --lr 0.001 --seed 1 --out " + run).code == 0);

  auto out = (dir / "m").string();
  CmdResult r = run_cli("associate --checkpoint " + run + "/checkpoint.bin --scenario " + scen +
                        " --all --out " + out);
  CHECK(r.code == 0);
  CHECK(fs::exists(fs::path(out) / "matching_000.json"));
  CHECK(r.output.find("accuracy") != std::string::npos);

  // window-length mismatch names both values
  CmdResult bad = run_cli("associate --checkpoint " + run + "/checkpoint.bin --scenario " + scen +
                          " --k 8 --out " + out);
  CHECK(bad.code == 2);
  CHECK(bad.output.find("k=6") != std::string::npos);
  CHECK(bad.output.find("k=8") != std::string::npos);

  // baselines need no checkpoint
  auto out_ed = (dir / "ed").string();
  CmdResult red = run_cli("associate --method ed --scenario " + scen + " --all --out " + out_ed);
  CHECK(red.code == 0);
  CHECK(fs::exists(fs::path(out_ed) / "matching_000.json"));

  gmva::json j = gmva::load_json_file((fs::path(out_ed) / "matching_000.json").string());
  CHECK(j.contains("pairs"));
  CHECK(j.contains("unmatched_a"));
  CHECK(j.contains("unmatched_b"));
  fs::remove_all(dir);
}

TEST_CASE("sweep emits one row per cell and method", "[cli]") {
  auto dir = fresh_dir("gmva_cli_sweep");
  CmdResult r = run_cli("sweep --methods ed,cd --densities low --missing 0 --seeds 1,2 --out " +
                        (dir / "sw").string());
  CHECK(r.code == 0);
  auto rows = gmva::load_results_csv((dir / "sw" / "results.csv").string());
  CHECK(rows.size() == 4);  // 2 seeds x 2 methods
  CHECK(fs::exists(dir / "sw" / "summary.md"));
  for (const auto& row : rows) {
    CHECK(row.accuracy >= 0.0);
    CHECK(row.accuracy <= 100.0);
  }
  // gmva rows require a checkpoint
  CHECK(run_cli("sweep --methods gmva --densities low --missing 0 --seeds 1 --out " +
                (dir / "bad").string()).code == 2);
  fs::remove_all(dir);
}

TEST_CASE("report renders svg plots and validates its input", "[cli]") {
  auto dir = fresh_dir("gmva_cli_report");
  std::vector<gmva::ResultRow> rows{{"s", "gmva", "low", 0, 97.0, 0.5},
                                    {"s", "ed", "low", 0, 88.0, 0.01},
                                    {"s", "gmva", "high", 0, 86.0, 1.0},
                                    {"s", "ed", "high", 0, 57.0, 0.02}};
  auto csv = (dir / "results.csv").string();
  gmva::save_results_csv(csv, rows);
  CmdResult r = run_cli("report --results " + csv + " --out " + (dir / "rep").string());
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "rep" / "accuracy_vs_density.svg"));
  CHECK(fs::exists(dir / "rep" / "accuracy_vs_missing.svg"));
  auto svg = gmva::read_text_file((dir / "rep" / "accuracy_vs_density.svg").string());
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("gmva") != std::string::npos);
  CHECK(svg.find("ed") != std::string::npos);

  // header-only input renders an empty chart, exit 0
  auto empty_csv = (dir / "empty.csv").string();
  gmva::save_results_csv(empty_csv, {});
  CHECK(run_cli("report --results " + empty_csv + " --out " + (dir / "rep2").string()).code == 0);
  CHECK(fs::exists(dir / "rep2" / "accuracy_vs_density.svg"));

  // malformed csv names the line
  gmva::write_text_file((dir / "bad.csv").string(),
                        "scenario,method,density,missing,accuracy,seconds\nno,good\n");
  CmdResult bad = run_cli("report --results " + (dir / "bad.csv").string() + " --out " +
                          (dir / "rep3").string());
  CHECK(bad.code == 2);
  CHECK(bad.output.find(":2:") != std::string::npos);
  fs::remove_all(dir);
}
