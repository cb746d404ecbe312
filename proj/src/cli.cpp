#include "gntm/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "gntm/checkpoint.hpp"
#include "gntm/evaluation.hpp"

namespace gntm::cli {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return static_cast<std::size_t>(out);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Key {
  const char* name;
  const char* help;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define GNTM_SIZE_KEY(NAME, FIELD, HELP)                                                     \
  Key {                                                                                      \
    NAME, HELP, [](RunConfig& c, const std::string& v) { c.FIELD = parse_size(NAME, v); }, \
        [](const RunConfig& c) { return std::to_string(c.FIELD); }                         \
  }
#define GNTM_DOUBLE_KEY(NAME, FIELD, HELP)                                                     \
  Key {                                                                                        \
    NAME, HELP, [](RunConfig& c, const std::string& v) { c.FIELD = parse_double(NAME, v); }, \
        [](const RunConfig& c) { return fmt_double(c.FIELD); }                               \
  }
#define GNTM_BOOL_KEY(NAME, FIELD, HELP)                                                     \
  Key {                                                                                      \
    NAME, HELP, [](RunConfig& c, const std::string& v) { c.FIELD = parse_bool(NAME, v); }, \
        [](const RunConfig& c) { return std::string(c.FIELD ? "true" : "false"); }         \
  }
#define GNTM_STRING_KEY(NAME, FIELD, HELP)                                      \
  Key {                                                                         \
    NAME, HELP, [](RunConfig& c, const std::string& v) { c.FIELD = v; },        \
        [](const RunConfig& c) { return c.FIELD; }                              \
  }

const std::vector<Key>& key_table() {
  static const std::vector<Key> table = {
      Key{"seed", "master seed for data, splits, init and shuffling",
          [](RunConfig& c, const std::string& v) { c.seed = parse_size("seed", v); },
          [](const RunConfig& c) { return std::to_string(c.seed); }},
      GNTM_SIZE_KEY("per_class", synth.per_class, "synthetic records per class"),
      GNTM_SIZE_KEY("features", synth.features, "synthetic feature count"),
      GNTM_SIZE_KEY("window", pipeline.window, "records per window"),
      GNTM_SIZE_KEY("stride", pipeline.stride, "window stride"),
      GNTM_SIZE_KEY("chunk_size", pipeline.chunk_size, "per-class cap when balancing"),
      GNTM_DOUBLE_KEY("test_fraction", pipeline.test_fraction, "held-out test fraction"),
      Key{"val_fraction", "validation fraction of the reduced training pool",
          [](RunConfig& c, const std::string& v) {
            c.pipeline.val_fraction = c.train.val_fraction = parse_double("val_fraction", v);
          },
          [](const RunConfig& c) { return fmt_double(c.pipeline.val_fraction); }},
      Key{"reduce_fraction", "fraction of the non-test pool kept for train/val",
          [](RunConfig& c, const std::string& v) {
            c.pipeline.reduce_fraction = c.train.reduce_fraction = parse_double("reduce_fraction", v);
          },
          [](const RunConfig& c) { return fmt_double(c.pipeline.reduce_fraction); }},
      GNTM_BOOL_KEY("pure_windows", pipeline.pure_windows, "drop windows spanning two labels"),
      GNTM_SIZE_KEY("gru1_units", model.gru1_units, "first GRU width"),
      GNTM_SIZE_KEY("gru2_units", model.gru2_units, "second GRU width"),
      GNTM_SIZE_KEY("memory_rows", model.memory_rows, "NTM memory rows"),
      GNTM_SIZE_KEY("memory_width", model.memory_width, "NTM memory row width"),
      GNTM_SIZE_KEY("controller_units", model.controller_units, "NTM controller width"),
      GNTM_SIZE_KEY("dense_units", model.dense_units, "hidden dense width"),
      GNTM_BOOL_KEY("additive_write", model.additive_write, "disable the erase vector"),
      GNTM_DOUBLE_KEY("lr", train.lr, "Adam learning rate"),
      GNTM_DOUBLE_KEY("beta1", train.beta1, "Adam beta1"),
      GNTM_DOUBLE_KEY("beta2", train.beta2, "Adam beta2"),
      GNTM_DOUBLE_KEY("epsilon", train.epsilon, "Adam epsilon"),
      GNTM_SIZE_KEY("batch_size", train.batch_size, "examples per batch"),
      GNTM_SIZE_KEY("max_epochs", train.max_epochs, "epoch limit"),
      GNTM_SIZE_KEY("patience", train.patience, "epochs without improvement before stopping"),
      GNTM_DOUBLE_KEY("min_improvement", train.min_improvement, "val-loss decrease that counts as improvement"),
      GNTM_BOOL_KEY("record_time", train.record_time, "write wall time into the epoch log"),
      GNTM_STRING_KEY("data", data, "CSV file, comma list, directory or window cache"),
      GNTM_STRING_KEY("schema", schema, "CSV schema file"),
      GNTM_STRING_KEY("out_dir", out_dir, "output directory"),
      GNTM_STRING_KEY("checkpoint", checkpoint, "checkpoint path"),
      GNTM_STRING_KEY("report_dir", report_dir, "report output directory"),
      GNTM_STRING_KEY("epoch_log", epoch_log, "epoch log CSV"),
      GNTM_STRING_KEY("input", input, "CSV stream to classify, - for stdin"),
      GNTM_DOUBLE_KEY("min_confidence", min_confidence, "print 'uncertain' below this probability"),
      GNTM_DOUBLE_KEY("tolerance", tolerance, "gradient check relative tolerance"),
      GNTM_DOUBLE_KEY("fd_epsilon", fd_epsilon, "finite-difference step"),
      GNTM_SIZE_KEY("coordinates", coordinates, "minimum sampled coordinates"),
  };
  return table;
}

#undef GNTM_SIZE_KEY
#undef GNTM_DOUBLE_KEY
#undef GNTM_BOOL_KEY
#undef GNTM_STRING_KEY

const Key& find_key(const std::string& name) {
  for (const auto& k : key_table())
    if (name == k.name) return k;
  throw ConfigError("unknown key '" + name + "'");
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) { find_key(key).set(*this, trim(value)); }

void RunConfig::apply_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    try {
      set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  apply_text(ss.str(), path);
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& k : key_table()) out += std::string(k.name) + " = " + k.get(*this) + "\n";
  return out;
}

void RunConfig::propagate_seed() {
  synth.seed = seed;
  pipeline.seed = seed;
  train.seed = seed;
}

std::string RunConfig::checkpoint_path() const {
  return checkpoint.empty() ? (fs::path(out_dir) / "model.gntm").string() : checkpoint;
}
std::string RunConfig::report_path() const {
  return report_dir.empty() ? (fs::path(out_dir) / "report").string() : report_dir;
}
std::string RunConfig::epoch_log_path() const {
  return epoch_log.empty() ? (fs::path(out_dir) / "epochs.csv").string() : epoch_log;
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& k : key_table()) out.emplace_back(k.name);
  return out;
}

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir + ": " + ec.message());
}

std::vector<std::string> list_csvs(const std::string& data) {
  if (data.empty()) throw ConfigError("no data given (set 'data')");
  std::vector<std::string> files;
  if (fs::is_directory(data)) {
    for (const auto& entry : fs::directory_iterator(data))
      if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no .csv files in " + data);
    return files;
  }
  std::stringstream ss(data);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!trim(item).empty()) files.push_back(trim(item));
  return files;
}

CsvSchema resolve_schema(const RunConfig& cfg, const std::vector<std::string>& files) {
  if (!cfg.schema.empty()) return CsvSchema::load(cfg.schema);
  std::vector<fs::path> candidates;
  if (!cfg.data.empty() && fs::is_directory(cfg.data)) candidates.push_back(fs::path(cfg.data) / "schema.txt");
  if (!files.empty()) candidates.push_back(fs::path(files.front()).parent_path() / "schema.txt");
  for (const auto& c : candidates)
    if (fs::exists(c)) return CsvSchema::load(c.string());
  return CsvSchema::parse("");
}

struct LabeledData {
  std::vector<std::string> feature_names;
  CsvSchema schema;
  std::vector<std::vector<FlowRecord>> files;
};

LabeledData load_labeled(const RunConfig& cfg) {
  const auto files = list_csvs(cfg.data);
  LabeledData out;
  out.schema = resolve_schema(cfg, files);
  for (const auto& f : files) {
    IngestResult r = ingest_csv(f, out.schema, true);
    if (out.feature_names.empty()) {
      out.feature_names = r.feature_names;
    } else if (r.feature_names != out.feature_names) {
      throw DataError(f + ": feature columns differ from " + files.front());
    }
    out.files.push_back(std::move(r.records));
  }
  return out;
}

void check_features(const NormStats& norm, const std::vector<std::string>& found, const std::string& source) {
  if (found.size() != norm.features()) {
    throw DataError("feature count mismatch: checkpoint expects F=" + std::to_string(norm.features()) + ", " +
                    source + " has F=" + std::to_string(found.size()));
  }
  if (norm.feature_names.empty()) return;
  for (std::size_t j = 0; j < found.size(); ++j) {
    if (found[j] != norm.feature_names[j]) {
      throw DataError("feature mismatch at column " + std::to_string(j) + ": checkpoint expects '" +
                      norm.feature_names[j] + "', " + source + " has '" + found[j] + "'");
    }
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

void cmd_synth(const RunConfig& cfg, std::ostream& out) {
  SynthSpec spec = cfg.synth;
  spec.seed = cfg.seed;
  const PerClass data = synth_generate(spec);
  ensure_dir(cfg.out_dir);

  CsvSchema schema = CsvSchema::parse("");
  schema.drop = {"stime"};
  std::vector<std::string> names = {"stime"};
  for (const auto& n : synth_feature_names(spec.features)) names.push_back(n);

  static const std::array<const char*, 3> kFiles = {"normal.csv", "dos.csv", "ddos.csv"};
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<FlowRecord> rows = data[c];
    for (std::size_t t = 0; t < rows.size(); ++t)
      rows[t].features.insert(rows[t].features.begin(), static_cast<double>(t));
    const auto path = fs::path(cfg.out_dir) / kFiles[c];
    write_csv(path.string(), names, rows, schema);
    out << "wrote " << path.string() << " (" << rows.size() << " rows)\n";
  }
  const auto schema_path = fs::path(cfg.out_dir) / "schema.txt";
  schema.save(schema_path.string());
  out << "wrote " << schema_path.string() << "\n";
}

TrainResult cmd_train(const RunConfig& cfg, std::ostream& out) {
  RunConfig rc = cfg;
  rc.propagate_seed();
  rc.train.validate();
  const LabeledData loaded = load_labeled(rc);

  PerClass per_class;
  for (const auto& records : loaded.files) {
    const PerClass grouped = group_by_class(records);
    for (std::size_t c = 0; c < 3; ++c) per_class[c].insert(per_class[c].end(), grouped[c].begin(), grouped[c].end());
  }
  const PreparedData prepared = prepare_dataset(per_class, loaded.feature_names, loaded.schema.mode, rc.pipeline);
  out << "windows: train=" << prepared.train.size() << " val=" << prepared.val.size()
      << " test=" << prepared.test.size() << "\n";

  ModelConfig model = rc.model;
  model.input_features = loaded.feature_names.size();
  model.window = rc.pipeline.window;

  TrainCallbacks callbacks;
  callbacks.on_epoch_end = [&](const EpochLog& log, const ModelParams&) {
    char line[160];
    std::snprintf(line, sizeof(line), "epoch %zu: train_loss=%.6f train_acc=%.4f val_loss=%.6f val_acc=%.4f\n",
                  log.epoch, log.train_loss, log.train_acc, log.val_loss, log.val_acc);
    out << line << std::flush;
  };
  TrainResult result = train(model, prepared.train, prepared.val, rc.train, callbacks, prepared.norm);

  ensure_dir(rc.out_dir);
  save_checkpoint(result.best, rc.checkpoint_path());
  write_epoch_log(rc.epoch_log_path(), result.logs);
  save_window_cache((fs::path(rc.out_dir) / "test_windows.gntm").string(), prepared.test, prepared.norm);
  write_text(fs::path(rc.out_dir) / "run.cfg", rc.to_text());
  out << "best epoch " << result.best.epoch << " val_loss=" << fmt_double(result.best.val_loss)
      << (result.stopped_early ? " (early stop)" : "") << "\n"
      << "checkpoint " << rc.checkpoint_path() << "\n";
  return result;
}

EvalReport cmd_eval(const RunConfig& cfg, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(cfg.checkpoint_path());
  const std::string data =
      cfg.data.empty() ? (fs::path(cfg.out_dir) / "test_windows.gntm").string() : cfg.data;

  std::vector<LabeledWindow> windows;
  if (fs::path(data).extension() == ".gntm") {
    auto [cached, norm] = load_window_cache(data);
    check_features(ckpt.norm, norm.feature_names, data);
    if (!(norm == ckpt.norm)) throw DataError(data + " was normalized with different statistics than the checkpoint");
    windows = std::move(cached);
  } else {
    RunConfig rc = cfg;
    rc.data = data;
    const LabeledData loaded = load_labeled(rc);
    check_features(ckpt.norm, loaded.feature_names, data);
    for (const auto& records : loaded.files) {
      if (records.size() < ckpt.config.window) continue;
      auto w = make_windows(apply_minmax(records, ckpt.norm), ckpt.config.window, 1, false);
      windows.insert(windows.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
    }
  }
  if (windows.empty()) throw DataError("no evaluation windows in " + data);
  for (const auto& lw : windows) {
    if (lw.window.dim(0) != ckpt.config.window || lw.window.dim(1) != ckpt.config.input_features) {
      throw DataError("window shape " + shape_str(lw.window.shape()) + " does not match checkpoint [" +
                      std::to_string(ckpt.config.window) + "x" + std::to_string(ckpt.config.input_features) + "]");
    }
  }

  const EvalReport report = evaluate(ckpt.params, ckpt.config, windows);
  std::vector<EpochLog> logs;
  if (fs::exists(cfg.epoch_log_path())) logs = read_epoch_log(cfg.epoch_log_path());
  emit_report(report, cfg.report_path(), logs);
  out << summary_line(report) << "\n";
  return report;
}

std::size_t cmd_detect(const RunConfig& cfg, std::istream& in, std::ostream& out, std::ostream& err) {
  const Checkpoint ckpt = load_checkpoint(cfg.checkpoint_path());
  const CsvSchema schema =
      resolve_schema(cfg, cfg.input == "-" ? std::vector<std::string>{} : std::vector<std::string>{cfg.input});
  std::string line;
  if (!std::getline(in, line)) throw DataError("detect: empty input, expected a CSV header");
  const CsvRowParser parser(line, schema, false);
  check_features(ckpt.norm, parser.feature_names(), "input");

  const std::size_t window = ckpt.config.window;
  std::deque<std::vector<double>> buffer;
  std::size_t index = 0, rows = 0, lineno = 1;
  out << "index,class,p_Normal,p_DoS,p_DDoS\n";
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto rec = parser.parse(line);
    if (!rec) {
      err << "line " << lineno << ": rejected malformed record\n";
      continue;
    }
    ++index;
    for (std::size_t j = 0; j < rec->features.size(); ++j) rec->features[j] = ckpt.norm.scale(j, rec->features[j]);
    buffer.push_back(std::move(rec->features));
    if (buffer.size() > window) buffer.pop_front();
    if (buffer.size() < window) continue;

    Tensor w({window, ckpt.config.input_features});
    for (std::size_t t = 0; t < window; ++t) std::copy(buffer[t].begin(), buffer[t].end(), w.row(t).begin());
    const Prediction pred = predict(ckpt.params, ckpt.config, w);
    const bool confident = pred.probs[pred.class_index] >= cfg.min_confidence;
    char probs[96];
    std::snprintf(probs, sizeof(probs), ",%.6f,%.6f,%.6f\n", pred.probs[0], pred.probs[1], pred.probs[2]);
    out << index << ',' << (confident ? kClassNames[pred.class_index] : std::string("uncertain")) << probs;
    ++rows;
  }
  out.flush();
  if (index < window) {
    err << "warm-up: received " << index << " records, need " << window << " before the first classification\n";
  }
  return rows;
}

GradCheckReport cmd_gradcheck(const RunConfig& cfg, std::ostream& out) {
  GradCheckOptions opts;
  opts.seed = cfg.seed;
  opts.tolerance = cfg.tolerance;
  opts.epsilon = cfg.fd_epsilon;
  opts.min_coordinates = cfg.coordinates;
  const GradCheckReport r = grad_check(ModelConfig::tiny(), opts);
  char line[256];
  std::snprintf(line, sizeof(line),
                "gradcheck: coordinates=%zu tensors=%zu max_rel_error=%.3e tolerance=%.1e worst=%s[%zu] %s\n",
                r.coordinates, r.tensors_covered, r.max_rel_error, r.tolerance, r.worst.tensor.c_str(), r.worst.index,
                r.passed ? "PASS" : "FAIL");
  out << line;
  return r;
}

namespace {

struct Command {
  CLI::App* app = nullptr;
  std::string config_file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;
  std::vector<std::pair<std::string, CLI::Option*>> options;
};

void add_flags(Command& cmd, const std::vector<std::string>& keys) {
  for (const auto& key : keys) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (key == "out_dir") flag = "-o," + flag;
    const Key& k = find_key(key);
    CLI::Option* opt = cmd.app->add_option(flag, cmd.flags[key], k.help);
    cmd.options.emplace_back(key, opt);
  }
}

RunConfig resolve(const Command& cmd) {
  RunConfig cfg;
  if (const char* env = std::getenv("GNTM_SEED"); env && *env) {
    try {
      cfg.set("seed", env);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("GNTM_SEED: ") + e.what());
    }
  }
  if (!cmd.config_file.empty()) cfg.load_file(cmd.config_file);
  for (const auto& s : cmd.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    cfg.set(trim(s.substr(0, eq)), s.substr(eq + 1));
  }
  for (const auto& [key, opt] : cmd.options)
    if (opt->count() > 0) cfg.set(key, cmd.flags.at(key));
  return cfg;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"GRU + neural Turing machine traffic classifier", "gntm"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every command");

  const std::vector<std::string> pipeline_keys = {"window",      "stride",          "chunk_size",  "test_fraction",
                                                  "val_fraction", "reduce_fraction", "pure_windows"};
  const std::vector<std::string> model_keys = {"gru1_units",       "gru2_units",  "memory_rows",   "memory_width",
                                               "controller_units", "dense_units", "additive_write"};
  const std::vector<std::string> train_keys = {"lr",         "beta1",    "beta2",           "epsilon",    "batch_size",
                                               "max_epochs", "patience", "min_improvement", "record_time"};

  std::map<std::string, Command> commands;
  auto make = [&](const std::string& name, const std::string& desc, std::vector<std::string> keys) {
    Command& cmd = commands[name];
    cmd.app = app.add_subcommand(name, desc);
    cmd.app->add_option("-c,--config", cmd.config_file, "key = value config file");
    cmd.app->add_option("--set", cmd.sets, "override one key, key=value (repeatable)");
    keys.insert(keys.begin(), "seed");
    add_flags(cmd, keys);
  };
  make("synth", "write a seeded synthetic dataset", {"per_class", "features", "out_dir"});
  {
    std::vector<std::string> keys = {"data", "schema", "out_dir", "checkpoint", "epoch_log"};
    for (const auto* group : {&pipeline_keys, &model_keys, &train_keys}) keys.insert(keys.end(), group->begin(), group->end());
    make("train", "prepare data, train and save the best checkpoint", keys);
  }
  make("eval", "evaluate a checkpoint and write report files",
       {"checkpoint", "data", "schema", "out_dir", "report_dir", "epoch_log"});
  make("detect", "classify a CSV stream with a rolling window", {"checkpoint", "input", "schema", "min_confidence"});
  make("gradcheck", "compare analytic gradients with finite differences",
       {"tolerance", "fd_epsilon", "coordinates"});

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    for (auto& [name, cmd] : commands) {
      if (!cmd.app->parsed()) continue;
      const RunConfig cfg = resolve(cmd);
      if (name == "synth") {
        cmd_synth(cfg, out);
      } else if (name == "train") {
        cmd_train(cfg, out);
      } else if (name == "eval") {
        cmd_eval(cfg, out);
      } else if (name == "detect") {
        if (cfg.input == "-") {
          cmd_detect(cfg, std::cin, out, err);
        } else {
          std::ifstream in(cfg.input);
          if (!in) throw std::runtime_error("cannot open " + cfg.input);
          cmd_detect(cfg, in, out, err);
        }
      } else if (name == "gradcheck") {
        if (!cmd_gradcheck(cfg, out).passed) return kGradcheckFailed;
      }
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  for (const auto& a : args) argv.push_back(a.c_str());
  argv.push_back(nullptr);
  return run(static_cast<int>(args.size()), argv.data(), out, err);
}

}  // namespace gntm::cli
