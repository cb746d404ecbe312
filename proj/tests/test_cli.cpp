#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "gntm/checkpoint.hpp"
#include "gntm/cli.hpp"

using namespace gntm;
using namespace gntm::cli;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result gntm_run(const std::vector<std::string>& args) {
  std::vector<std::string> argv = {"gntm"};
  argv.insert(argv.end(), args.begin(), args.end());
  std::ostringstream out, err;
  const int code = run(argv, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

fs::path workdir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "gntm_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// Synth data plus a short training run shared by the eval and detect cases.
const fs::path& trained_run() {
  static const fs::path run_dir = [] {
    const fs::path data = workdir() / "shared_data";
    const fs::path out = workdir() / "shared_run";
    REQUIRE(gntm_run({"synth", "--per-class", "200", "-o", data.string()}).code == 0);
    const Result r = gntm_run({"train", "--data", data.string(), "-o", out.string(), "--max-epochs", "2",
                               "--record-time", "false"});
    INFO(r.err);
    REQUIRE(r.code == 0);
    return out;
  }();
  return run_dir;
}

// Header plus the first `n` rows of a synth CSV.
std::string csv_head(const fs::path& file, std::size_t n) {
  const auto rows = lines_of(slurp(file));
  std::string text;
  for (std::size_t i = 0; i <= n && i < rows.size(); ++i) text += rows[i] + "\n";
  return text;
}

}  // namespace

TEST_CASE("RunConfig keys round-trip through text") {
  RunConfig cfg;
  cfg.set("lr", "0.01");
  cfg.set("pure_windows", "true");
  cfg.set("out_dir", "elsewhere");
  cfg.set("val_fraction", "0.25");
  CHECK(cfg.train.lr == 0.01);
  CHECK(cfg.pipeline.val_fraction == 0.25);
  CHECK(cfg.train.val_fraction == 0.25);
  RunConfig back;
  back.apply_text(cfg.to_text());
  CHECK(back.to_text() == cfg.to_text());
  CHECK(lines_of(cfg.to_text()).size() == RunConfig::keys().size());
  CHECK(cfg.checkpoint_path() == (fs::path("elsewhere") / "model.gntm").string());

  CHECK_THROWS_AS(cfg.set("learning_rate", "1"), ConfigError);
  CHECK_THROWS_AS(cfg.set("batch_size", "-3"), ConfigError);
  CHECK_THROWS_AS(cfg.set("lr", "fast"), ConfigError);
  CHECK_THROWS_AS(cfg.apply_text("lr 0.1\n"), ConfigError);
  CHECK_NOTHROW(cfg.apply_text("# only a comment\n\n  lr = 0.5  # trailing\n"));
  CHECK(cfg.train.lr == 0.5);
}

TEST_CASE("seed propagates to every component") {
  RunConfig cfg;
  cfg.set("seed", "42");
  cfg.propagate_seed();
  CHECK(cfg.synth.seed == 42);
  CHECK(cfg.pipeline.seed == 42);
  CHECK(cfg.train.seed == 42);
}

TEST_CASE("synth is deterministic and its schema round-trips") {
  const fs::path a = workdir() / "synth_a";
  const fs::path b = workdir() / "synth_b";
  for (const auto& dir : {a, b})
    REQUIRE(gntm_run({"synth", "--seed", "7", "--per-class", "150", "--features", "12", "-o", dir.string()}).code == 0);
  for (const char* name : {"normal.csv", "dos.csv", "ddos.csv", "schema.txt"}) {
    CAPTURE(name);
    CHECK(slurp(a / name) == slurp(b / name));
  }
  const CsvSchema schema = CsvSchema::load((a / "schema.txt").string());
  int expected_label = 0;
  for (const char* name : {"normal.csv", "dos.csv", "ddos.csv"}) {
    const IngestResult r = ingest_csv((a / name).string(), schema);
    CHECK(r.records.size() == 150);
    CHECK(r.rejected == 0);
    CHECK(r.feature_names == synth_feature_names(12));
    for (const auto& rec : r.records) CHECK(rec.label == expected_label);
    ++expected_label;
  }
}

TEST_CASE("train writes one log row per epoch and is reproducible") {
  const fs::path run = trained_run();
  for (const char* name : {"model.gntm", "epochs.csv", "test_windows.gntm", "run.cfg"}) CHECK(fs::exists(run / name));
  const auto logs = read_epoch_log((run / "epochs.csv").string());
  CHECK(logs.size() == 2);
  CHECK(lines_of(slurp(run / "epochs.csv")).size() == 3);

  const fs::path again = workdir() / "shared_run_again";
  REQUIRE(gntm_run({"train", "-c", (run / "run.cfg").string(), "-o", again.string()}).code == 0);
  CHECK(slurp(again / "epochs.csv") == slurp(run / "epochs.csv"));
  CHECK(load_checkpoint((again / "model.gntm").string()).val_loss ==
        load_checkpoint((run / "model.gntm").string()).val_loss);
}

TEST_CASE("eval emits parseable report files and a summary line") {
  const fs::path run = trained_run();
  const Result r = gntm_run({"eval", "-o", run.string()});
  INFO(r.err);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("accuracy=") != std::string::npos);
  CHECK(r.out.find("macro_f1=") != std::string::npos);
  const fs::path report = run / "report";
  const EvalReport parsed = parse_report_json(slurp(report / "report.json"));
  CHECK(parsed.windows > 0);
  for (const char* name : {"confusion.csv", "roc_Normal.csv", "roc_DoS.csv", "roc_DDoS.csv", "curves.csv"})
    CHECK(fs::exists(report / name));
}

TEST_CASE("eval on CSV data with a different feature count names both counts") {
  const fs::path run = trained_run();
  const fs::path narrow = workdir() / "narrow";
  REQUIRE(gntm_run({"synth", "--per-class", "30", "--features", "10", "-o", narrow.string()}).code == 0);
  const Result r = gntm_run({"eval", "--checkpoint", (run / "model.gntm").string(), "--data", narrow.string(),
                             "-o", (workdir() / "narrow_eval").string()});
  CHECK(r.code == kRuntime);
  CHECK(r.err.find("expects F=12") != std::string::npos);
  CHECK(r.err.find("F=10") != std::string::npos);
}

TEST_CASE("eval on labeled CSVs works end to end") {
  const fs::path run = trained_run();
  const Result r = gntm_run({"eval", "--checkpoint", (run / "model.gntm").string(), "--data",
                             (workdir() / "shared_data").string(), "-o", (workdir() / "csv_eval").string()});
  INFO(r.err);
  CHECK(r.code == 0);
  CHECK(parse_report_json(slurp(workdir() / "csv_eval" / "report" / "report.json")).windows == 3 * 191);
}

TEST_CASE("detect emits one row per record after warm-up") {
  const fs::path run = trained_run();
  const fs::path ddos = workdir() / "shared_data" / "ddos.csv";
  RunConfig cfg;
  cfg.out_dir = run.string();
  cfg.input = ddos.string();

  SUBCASE("nine records") {
    std::istringstream in(csv_head(ddos, 9));
    std::ostringstream out, err;
    CHECK(cmd_detect(cfg, in, out, err) == 0);
    CHECK(lines_of(out.str()).size() == 1);
    CHECK(err.str().find("warm-up") != std::string::npos);
  }
  SUBCASE("twelve records") {
    std::istringstream in(csv_head(ddos, 12));
    std::ostringstream out, err;
    CHECK(cmd_detect(cfg, in, out, err) == 3);
    const auto rows = lines_of(out.str());
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == "index,class,p_Normal,p_DoS,p_DDoS");
    for (std::size_t i = 1; i < 4; ++i) {
      std::istringstream row(rows[i]);
      std::string index, label, p;
      std::getline(row, index, ',');
      std::getline(row, label, ',');
      CHECK(index == std::to_string(9 + i));
      double sum = 0.0;
      while (std::getline(row, p, ',')) sum += std::stod(p);
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
    }
  }
  SUBCASE("confidence threshold") {
    cfg.min_confidence = 1.01;
    std::istringstream in(csv_head(ddos, 10));
    std::ostringstream out, err;
    CHECK(cmd_detect(cfg, in, out, err) == 1);
    CHECK(out.str().find(",uncertain,") != std::string::npos);
  }
  SUBCASE("malformed lines are reported and skipped") {
    std::string text = csv_head(ddos, 10);
    text += "not,a,valid,row\n";
    std::istringstream in(text);
    std::ostringstream out, err;
    CHECK(cmd_detect(cfg, in, out, err) == 1);
    CHECK(err.str().find("rejected") != std::string::npos);
  }
}

TEST_CASE("detect through run reads the input file") {
  const fs::path run = trained_run();
  const fs::path input = workdir() / "detect_input.csv";
  std::ofstream(input) << csv_head(workdir() / "shared_data" / "dos.csv", 15);
  const Result r = gntm_run({"detect", "--checkpoint", (run / "model.gntm").string(), "--input", input.string(),
                             "--schema", (workdir() / "shared_data" / "schema.txt").string()});
  INFO(r.err);
  CHECK(r.code == 0);
  CHECK(lines_of(r.out).size() == 7);
}

TEST_CASE("gradcheck exit codes") {
  const Result pass = gntm_run({"gradcheck"});
  CHECK(pass.code == 0);
  CHECK(pass.out.find("PASS") != std::string::npos);
  const Result again = gntm_run({"gradcheck"});
  CHECK(again.out == pass.out);
  const Result strict = gntm_run({"gradcheck", "--tolerance", "1e-12"});
  CHECK(strict.code == kGradcheckFailed);
  CHECK(strict.out.find("FAIL") != std::string::npos);
}

TEST_CASE("usage errors exit 1") {
  CHECK(gntm_run({}).code == kUsage);
  CHECK(gntm_run({"gradcheck", "--no-such-flag"}).code == kUsage);
  CHECK(gntm_run({"frobnicate"}).code == kUsage);
  CHECK(gntm_run({"gradcheck", "--set", "colour=blue"}).code == kUsage);
  CHECK(gntm_run({"gradcheck", "--set", "novalue"}).code == kUsage);
  CHECK(gntm_run({"gradcheck", "-c", (workdir() / "missing.cfg").string()}).code == kUsage);
  CHECK(gntm_run({"train", "--lr", "0", "--data", (workdir() / "nowhere").string()}).code == kUsage);
}

TEST_CASE("runtime failures exit 2") {
  CHECK(gntm_run({"eval", "--checkpoint", (workdir() / "missing.gntm").string()}).code == kRuntime);
  CHECK(gntm_run({"train", "--data", (workdir() / "nowhere").string(), "-o", (workdir() / "x").string()}).code ==
        kRuntime);
}

TEST_CASE("help lists every flag of each command") {
  const Result r = gntm_run({"train", "--help"});
  CHECK(r.code == 0);
  for (const char* flag : {"--config", "--set", "--seed", "--data", "--lr", "--batch-size", "--patience",
                           "--max-epochs", "--memory-rows", "--window", "--record-time"})
    CHECK(r.out.find(flag) != std::string::npos);
  const Result d = gntm_run({"detect", "--help"});
  CHECK(d.out.find("--min-confidence") != std::string::npos);
}

TEST_CASE("precedence: defaults, GNTM_SEED, file, --set, flags") {
  const fs::path cfg_file = workdir() / "prec.cfg";
  std::ofstream(cfg_file) << "seed = 11\nper_class = 20\n";
  auto first_row = [](const fs::path& dir) { return lines_of(slurp(dir / "normal.csv")).at(1); };
  auto synth = [&](const std::string& name, std::vector<std::string> extra) {
    const fs::path dir = workdir() / name;
    std::vector<std::string> args = {"synth", "-o", dir.string()};
    args.insert(args.end(), extra.begin(), extra.end());
    REQUIRE(gntm_run(args).code == 0);
    return first_row(dir);
  };

  const std::string seed11 = synth("p11", {"--seed", "11", "--per-class", "20"});
  const std::string seed12 = synth("p12", {"--seed", "12", "--per-class", "20"});
  const std::string seed13 = synth("p13", {"--seed", "13", "--per-class", "20"});
  REQUIRE(seed11 != seed12);

  setenv("GNTM_SEED", "12", 1);
  CHECK(synth("env", {"--per-class", "20"}) == seed12);
  CHECK(synth("env_file", {"-c", cfg_file.string()}) == seed11);
  CHECK(synth("env_set", {"-c", cfg_file.string(), "--set", "seed=13"}) == seed13);
  CHECK(synth("env_flag", {"-c", cfg_file.string(), "--set", "seed=13", "--seed", "12"}) == seed12);
  setenv("GNTM_SEED", "banana", 1);
  CHECK(gntm_run({"synth", "-o", (workdir() / "bad_env").string()}).code == kUsage);
  unsetenv("GNTM_SEED");
  CHECK(lines_of(slurp(workdir() / "env_file" / "normal.csv")).size() == 21);
}
