#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "gntm/data.hpp"
#include "gntm/evaluation.hpp"
#include "gntm/model.hpp"
#include "gntm/training.hpp"

namespace gntm::cli {

/// Bad config file, unknown key or unparseable value.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum ExitCode : int { kOk = 0, kUsage = 1, kRuntime = 2, kGradcheckFailed = 3 };

/// Every option the commands read. Resolution order, later wins:
/// built-in defaults, GNTM_SEED, config file, --set key=value, named flags.
struct RunConfig {
  SynthSpec synth;
  PipelineConfig pipeline;
  ModelConfig model;
  TrainConfig train;

  std::uint64_t seed = 7;
  std::string data;        // CSV file, comma list of CSV files, directory of CSVs, or a window cache
  std::string schema;      // schema file; defaults to <data dir>/schema.txt when present
  std::string out_dir = "run";
  std::string checkpoint;  // defaults to <out_dir>/model.gntm
  std::string report_dir;  // defaults to <out_dir>/report
  std::string epoch_log;   // defaults to <out_dir>/epochs.csv
  std::string input = "-";
  double min_confidence = 0.0;
  double tolerance = 1e-4;
  double fd_epsilon = 1e-5;
  std::size_t coordinates = 200;

  /// Sets one key; throws ConfigError for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// Applies "key = value" lines; '#' starts a comment.
  void apply_text(const std::string& text, const std::string& origin = "config");
  void load_file(const std::string& path);
  /// Current values of every key, one "key = value" line each.
  std::string to_text() const;
  /// Pushes `seed` into the synth, pipeline and training configs.
  void propagate_seed();

  std::string checkpoint_path() const;
  std::string report_path() const;
  std::string epoch_log_path() const;

  /// Names of every accepted key.
  static std::vector<std::string> keys();
};

/// Writes normal.csv, dos.csv, ddos.csv and schema.txt into cfg.out_dir.
void cmd_synth(const RunConfig& cfg, std::ostream& out);

/// Loads labeled CSVs, prepares splits, trains and writes the checkpoint,
/// epoch log, test-split window cache and resolved config into cfg.out_dir.
TrainResult cmd_train(const RunConfig& cfg, std::ostream& out);

/// Evaluates a checkpoint on a window cache or labeled CSVs and emits the
/// report files; prints a one-line summary.
EvalReport cmd_eval(const RunConfig& cfg, std::ostream& out);

/// Streams CSV rows from `in`, printing one classification per record once
/// the window is full. Returns the number of classification rows.
std::size_t cmd_detect(const RunConfig& cfg, std::istream& in, std::ostream& out, std::ostream& err);

GradCheckReport cmd_gradcheck(const RunConfig& cfg, std::ostream& out);

/// Full command-line entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gntm::cli
