#include "gntm/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace gntm {

namespace {

constexpr std::uint16_t kCacheVersion = 1;
constexpr double kMaxRejectFraction = 0.10;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += items[i];
  }
  return out;
}

// Splits one CSV line; double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

std::size_t rounded_count(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(n) * fraction));
}

}  // namespace

const char* to_string(CategoricalMode mode) { return mode == CategoricalMode::hash ? "hash" : "drop"; }

CategoricalMode parse_categorical_mode(const std::string& s) {
  if (s == "hash") return CategoricalMode::hash;
  if (s == "drop") return CategoricalMode::drop;
  throw DataError("categorical_mode must be 'hash' or 'drop', got '" + s + "'");
}

CsvSchema CsvSchema::parse(const std::string& text) {
  CsvSchema schema;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("schema line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "label_column") {
      schema.label_column = value;
    } else if (key.rfind("class.", 0) == 0) {
      const auto id = parse_number(value);
      if (!id || *id < 0 || *id > 2 || *id != std::floor(*id)) {
        throw DataError("schema: class id for '" + key.substr(6) + "' must be 0, 1 or 2");
      }
      schema.classes[key.substr(6)] = static_cast<int>(*id);
    } else if (key == "drop") {
      schema.drop = split_list(value);
    } else if (key == "categorical") {
      schema.categorical = split_list(value);
    } else if (key == "categorical_mode") {
      schema.mode = parse_categorical_mode(value);
    } else {
      throw DataError("schema: unknown key '" + key + "'");
    }
  }
  if (schema.classes.empty()) {
    for (int c = 0; c < 3; ++c) schema.classes[kClassNames[static_cast<std::size_t>(c)]] = c;
  }
  return schema;
}

CsvSchema CsvSchema::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open schema file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string CsvSchema::serialize() const {
  std::ostringstream out;
  out << "label_column = " << label_column << '\n';
  // Emit classes in id order so files are stable.
  std::vector<std::pair<int, std::string>> by_id;
  for (const auto& [name, id] : classes) by_id.emplace_back(id, name);
  std::sort(by_id.begin(), by_id.end());
  for (const auto& [id, name] : by_id) out << "class." << name << " = " << id << '\n';
  out << "drop = " << join(drop) << '\n';
  out << "categorical = " << join(categorical) << '\n';
  out << "categorical_mode = " << to_string(mode) << '\n';
  return out.str();
}

void CsvSchema::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << serialize();
}

double hash_bucket(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

CsvRowParser::CsvRowParser(const std::string& header_line, const CsvSchema& schema, bool require_label)
    : schema_(schema) {
  const auto header = split_csv(header_line);
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string& col = header[i];
    if (col == schema_.label_column) {
      label_col_ = i;
      kinds_.push_back(Kind::skip);
    } else if (contains(schema_.drop, col)) {
      kinds_.push_back(Kind::skip);
    } else if (contains(schema_.categorical, col)) {
      if (schema_.mode == CategoricalMode::hash) {
        kinds_.push_back(Kind::categorical);
        names_.push_back(col);
      } else {
        kinds_.push_back(Kind::skip);
      }
    } else {
      kinds_.push_back(Kind::numeric);
      names_.push_back(col);
    }
  }
  if (require_label && !label_col_) throw DataError("missing label column '" + schema_.label_column + "'");
  if (names_.empty()) throw DataError("no feature columns left after applying the schema");
}

std::optional<FlowRecord> CsvRowParser::parse(const std::string& line) const {
  const auto cells = split_csv(line);
  if (cells.size() != kinds_.size()) return std::nullopt;
  FlowRecord rec;
  rec.label = -1;
  rec.features.reserve(names_.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    switch (kinds_[i]) {
      case Kind::numeric: {
        const auto v = parse_number(cells[i]);
        if (!v) return std::nullopt;
        rec.features.push_back(*v);
        break;
      }
      case Kind::categorical:
        rec.features.push_back(hash_bucket(cells[i]));
        break;
      case Kind::skip:
        break;
    }
  }
  if (label_col_) {
    const std::string& name = cells[*label_col_];
    const auto it = schema_.classes.find(name);
    if (it == schema_.classes.end()) throw DataError("unknown label '" + name + "'");
    rec.label = it->second;
  }
  return rec;
}

IngestResult ingest_csv(std::istream& in, const CsvSchema& schema, bool require_label) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty CSV: no header row");
  const CsvRowParser parser(line, schema, require_label);
  IngestResult result;
  result.feature_names = parser.feature_names();
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (auto rec = parser.parse(line)) {
      result.records.push_back(std::move(*rec));
    } else {
      ++result.rejected;
    }
  }
  const std::size_t total = result.records.size() + result.rejected;
  if (total > 0 && static_cast<double>(result.rejected) > kMaxRejectFraction * static_cast<double>(total)) {
    throw DataError("rejected " + std::to_string(result.rejected) + " of " + std::to_string(total) +
                    " rows (more than 10%)");
  }
  return result;
}

IngestResult ingest_csv(const std::string& path, const CsvSchema& schema, bool require_label) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return ingest_csv(in, schema, require_label);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_csv(const std::string& path, const std::vector<std::string>& feature_names,
               const std::vector<FlowRecord>& records, const CsvSchema& schema) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  std::map<int, std::string> names;
  for (const auto& [name, id] : schema.classes) names.emplace(id, name);
  out << join(feature_names) << ',' << schema.label_column << '\n';
  char buf[32];
  for (const auto& rec : records) {
    for (double v : rec.features) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << buf << ',';
    }
    out << names.at(rec.label) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

double NormStats::scale(std::size_t feature, double x) const {
  const double range = max[feature] - min[feature];
  if (!(range > 0.0)) return 0.0;
  return std::clamp((x - min[feature]) / range, 0.0, 1.0);
}

NormStats fit_minmax(const std::vector<FlowRecord>& records) {
  NormStats stats;
  if (records.empty()) return stats;
  stats.min = records.front().features;
  stats.max = records.front().features;
  for (const auto& rec : records) {
    for (std::size_t j = 0; j < rec.features.size(); ++j) {
      stats.min[j] = std::min(stats.min[j], rec.features[j]);
      stats.max[j] = std::max(stats.max[j], rec.features[j]);
    }
  }
  return stats;
}

std::vector<FlowRecord> apply_minmax(const std::vector<FlowRecord>& records, const NormStats& stats) {
  std::vector<FlowRecord> out = records;
  for (auto& rec : out) {
    if (rec.features.size() != stats.features()) {
      throw DimensionError("apply_minmax: record has " + std::to_string(rec.features.size()) +
                           " features, stats have " + std::to_string(stats.features()));
    }
    for (std::size_t j = 0; j < rec.features.size(); ++j) rec.features[j] = stats.scale(j, rec.features[j]);
  }
  return out;
}

Tensor one_hot(int label) {
  if (label < 0 || label > 2) throw std::out_of_range("one_hot: class id " + std::to_string(label) + " not in 0..2");
  Tensor t({3});
  t[static_cast<std::size_t>(label)] = 1.0;
  return t;
}

int LabeledWindow::class_id() const { return static_cast<int>(std::max_element(label.data().begin(), label.data().end()) - label.data().begin()); }

std::vector<LabeledWindow> make_windows(const std::vector<FlowRecord>& records, std::size_t window,
                                        std::size_t stride, bool pure_windows) {
  if (window == 0 || stride == 0) throw std::invalid_argument("make_windows: window and stride must be >= 1");
  if (records.size() < window) {
    throw DataError("make_windows: " + std::to_string(records.size()) + " records is fewer than window " +
                    std::to_string(window));
  }
  const std::size_t features = records.front().features.size();
  const std::size_t count = (records.size() - window) / stride + 1;
  std::vector<LabeledWindow> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t start = k * stride;
    const int label = records[start + window - 1].label;
    bool pure = true;
    Tensor w({window, features});
    for (std::size_t t = 0; t < window; ++t) {
      const FlowRecord& rec = records[start + t];
      if (rec.features.size() != features) throw DimensionError("make_windows: ragged feature rows");
      pure = pure && rec.label == label;
      std::copy(rec.features.begin(), rec.features.end(), w.row(t).begin());
    }
    if (pure_windows && !pure) continue;
    out.push_back(LabeledWindow{std::move(w), one_hot(label)});
  }
  return out;
}

NormStats fit_minmax(const std::vector<LabeledWindow>& windows) {
  NormStats stats;
  if (windows.empty()) return stats;
  const std::size_t features = windows.front().window.dim(1);
  stats.min.assign(features, INFINITY);
  stats.max.assign(features, -INFINITY);
  for (const auto& lw : windows) {
    for (std::size_t t = 0; t < lw.window.dim(0); ++t) {
      for (std::size_t j = 0; j < features; ++j) {
        stats.min[j] = std::min(stats.min[j], lw.window(t, j));
        stats.max[j] = std::max(stats.max[j], lw.window(t, j));
      }
    }
  }
  return stats;
}

void apply_minmax(Tensor& window, const NormStats& stats) {
  if (window.rank() != 2 || window.dim(1) != stats.features()) {
    throw DimensionError("apply_minmax: window " + shape_str(window.shape()) + " vs " +
                         std::to_string(stats.features()) + " normalized features");
  }
  for (std::size_t t = 0; t < window.dim(0); ++t)
    for (std::size_t j = 0; j < window.dim(1); ++j) window(t, j) = stats.scale(j, window(t, j));
}

void apply_minmax(std::vector<LabeledWindow>& windows, const NormStats& stats) {
  for (auto& lw : windows) apply_minmax(lw.window, stats);
}

PerClass balance_classes(const PerClass& per_class, std::size_t chunk_size) {
  std::size_t take = chunk_size;
  for (std::size_t c = 0; c < 3; ++c) {
    if (per_class[c].empty()) throw DataError("class " + kClassNames[c] + " has no records");
    take = std::min(take, per_class[c].size());
  }
  PerClass out;
  for (std::size_t c = 0; c < 3; ++c) {
    out[c].assign(per_class[c].begin(), per_class[c].begin() + static_cast<std::ptrdiff_t>(take));
  }
  return out;
}

std::vector<FlowRecord> chunk_balance(const PerClass& per_class, std::size_t chunk_size, std::uint64_t seed) {
  const PerClass balanced = balance_classes(per_class, chunk_size);
  std::vector<FlowRecord> merged;
  for (const auto& cls : balanced) merged.insert(merged.end(), cls.begin(), cls.end());
  Rng rng(seed);
  const auto perm = rng_permutation(rng, merged.size());
  std::vector<FlowRecord> out;
  out.reserve(merged.size());
  for (std::size_t i : perm) out.push_back(merged[i]);
  return out;
}

PerClass group_by_class(const std::vector<FlowRecord>& records) {
  PerClass out;
  for (const auto& rec : records) {
    if (rec.label < 0 || rec.label > 2) throw DataError("record label out of range: " + std::to_string(rec.label));
    out[static_cast<std::size_t>(rec.label)].push_back(rec);
  }
  return out;
}

std::pair<std::vector<LabeledWindow>, std::vector<LabeledWindow>> train_val_split(std::vector<LabeledWindow> windows,
                                                                                  double val_fraction,
                                                                                  std::uint64_t seed) {
  if (windows.empty()) throw DataError("train_val_split: no windows");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw std::invalid_argument("train_val_split: fraction must be in (0, 1)");
  Rng rng(seed);
  const auto perm = rng_permutation(rng, windows.size());
  const std::size_t n_val = rounded_count(windows.size(), val_fraction);
  const std::size_t n_train = windows.size() - n_val;
  std::vector<LabeledWindow> train, val;
  train.reserve(n_train);
  val.reserve(n_val);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    (i < n_train ? train : val).push_back(std::move(windows[perm[i]]));
  }
  return {std::move(train), std::move(val)};
}

std::vector<LabeledWindow> reduce_fraction(const std::vector<LabeledWindow>& windows, double fraction,
                                           std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("reduce_fraction: fraction must be in (0, 1]");
  Rng rng(seed);
  const auto perm = rng_permutation(rng, windows.size());
  const std::size_t keep = rounded_count(windows.size(), fraction);
  std::vector<LabeledWindow> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.push_back(windows[perm[i]]);
  return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void SynthSpec::validate() const {
  if (features < 2) throw DataError("synth: need at least 2 features");
  if (per_class < 10) throw DataError("synth: need at least 10 records per class");
}

namespace {

struct FeatureProfile {
  const char* name;
  std::array<double, 3> mean;
  std::array<double, 3> stddev;
};

// Per-class mean and spread for the named features, in canonical class order.
const std::array<FeatureProfile, 8> kProfiles = {{
    {"pkt_rate", {20.0, 200.0, 180.0}, {3.0, 12.0, 12.0}},
    {"src_entropy", {2.0, 0.15, 5.0}, {0.25, 0.05, 0.3}},
    {"mean_pkt_size", {520.0, 90.0, 140.0}, {60.0, 10.0, 20.0}},
    {"syn_ratio", {0.08, 0.85, 0.7}, {0.03, 0.05, 0.06}},
    {"flow_duration", {3.0, 0.2, 0.5}, {0.8, 0.05, 0.1}},
    {"byte_rate", {1.0e4, 2.0e4, 2.5e4}, {2.0e3, 3.0e3, 4.0e3}},
    {"dst_port_entropy", {3.0, 0.5, 0.6}, {0.4, 0.2, 0.2}},
    {"ack_ratio", {0.6, 0.1, 0.15}, {0.08, 0.04, 0.05}},
}};

constexpr double kAutocorrelation = 0.8;
// Burst ramp on pkt_rate: sawtooth amplitude and period per attack class.
constexpr std::array<double, 3> kRampAmplitude = {0.0, 60.0, 80.0};
constexpr std::array<std::size_t, 3> kRampPeriod = {1, 25, 40};

}  // namespace

std::vector<std::string> synth_feature_names(std::size_t features) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < features; ++j) {
    names.push_back(j < kProfiles.size() ? std::string(kProfiles[j].name) : "aux_" + std::to_string(j - kProfiles.size()));
  }
  return names;
}

PerClass synth_generate(const SynthSpec& spec) {
  spec.validate();
  PerClass out;
  const double innovation = std::sqrt(1.0 - kAutocorrelation * kAutocorrelation);
  for (std::size_t c = 0; c < 3; ++c) {
    Rng rng(derive_seed(spec.seed, 100 + c));
    std::vector<double> noise(spec.features);
    for (auto& v : noise) v = rng.normal();
    const std::size_t phase = rng.below(kRampPeriod[c]);
    auto& records = out[c];
    records.reserve(spec.per_class);
    for (std::size_t t = 0; t < spec.per_class; ++t) {
      FlowRecord rec;
      rec.label = static_cast<int>(c);
      rec.features.resize(spec.features);
      for (std::size_t j = 0; j < spec.features; ++j) {
        noise[j] = kAutocorrelation * noise[j] + innovation * rng.normal();
        double mean, sd;
        if (j < kProfiles.size()) {
          mean = kProfiles[j].mean[c];
          sd = kProfiles[j].stddev[c];
        } else {
          // Overlapping filler features with a small class shift.
          mean = 10.0 + 0.3 * static_cast<double>(c);
          sd = 1.0;
        }
        double v = mean + sd * noise[j];
        if (j == kRateFeature && kRampAmplitude[c] > 0.0) {
          const std::size_t period = kRampPeriod[c];
          v += kRampAmplitude[c] * static_cast<double>((t + phase) % period) / static_cast<double>(period);
        }
        rec.features[j] = std::max(v, 0.0);
      }
      records.push_back(std::move(rec));
    }
  }
  return out;
}

void write_norm_stats(BinaryWriter& w, const NormStats& stats) {
  w.u32(static_cast<std::uint32_t>(stats.features()));
  for (double v : stats.min) w.f64(v);
  for (double v : stats.max) w.f64(v);
  w.u8(stats.categorical_mode == CategoricalMode::hash ? 0 : 1);
  w.u32(static_cast<std::uint32_t>(stats.feature_names.size()));
  for (const auto& n : stats.feature_names) w.str(n);
}

NormStats read_norm_stats(BinaryReader& r) {
  NormStats stats;
  const std::uint32_t f = r.u32();
  if (static_cast<std::uint64_t>(f) * 16 > r.remaining()) throw FormatError("truncated normalization block");
  stats.min.resize(f);
  stats.max.resize(f);
  for (auto& v : stats.min) v = r.f64();
  for (auto& v : stats.max) v = r.f64();
  stats.categorical_mode = r.u8() == 0 ? CategoricalMode::hash : CategoricalMode::drop;
  const std::uint32_t names = r.u32();
  if (names > r.remaining()) throw FormatError("truncated normalization block");
  for (std::uint32_t i = 0; i < names; ++i) stats.feature_names.push_back(r.str());
  return stats;
}

void save_window_cache(const std::string& path, const std::vector<LabeledWindow>& windows, const NormStats& stats) {
  const std::size_t steps = windows.empty() ? 0 : windows.front().window.dim(0);
  const std::size_t features = windows.empty() ? stats.features() : windows.front().window.dim(1);
  BinaryWriter w;
  write_header(w, ContainerKind::window_cache, kCacheVersion);
  w.u32(static_cast<std::uint32_t>(features));
  w.u32(static_cast<std::uint32_t>(steps));
  w.u64(windows.size());
  std::array<std::uint64_t, 3> counts{};
  for (const auto& lw : windows) ++counts[static_cast<std::size_t>(lw.class_id())];
  for (auto c : counts) w.u64(c);
  for (const auto& lw : windows) w.u8(static_cast<std::uint8_t>(lw.class_id()));
  for (const auto& lw : windows) {
    if (lw.window.dim(0) != steps || lw.window.dim(1) != features) throw DimensionError("save_window_cache: ragged windows");
    for (double v : lw.window.data()) w.f64(v);
  }
  write_norm_stats(w, stats);
  save_with_trailer(path, w);
}

std::pair<std::vector<LabeledWindow>, NormStats> load_window_cache(const std::string& path) {
  const auto bytes = load_with_trailer(path);
  BinaryReader r(bytes.data(), bytes.size());
  read_header(r, ContainerKind::window_cache, kCacheVersion);
  const std::size_t features = r.u32();
  const std::size_t steps = r.u32();
  const std::uint64_t count = r.u64();
  std::array<std::uint64_t, 3> counts{};
  for (auto& c : counts) c = r.u64();
  if (count > r.remaining()) throw FormatError("window cache: count exceeds file size");
  std::vector<int> labels(count);
  for (auto& l : labels) {
    l = r.u8();
    if (l > 2) throw FormatError("window cache: label out of range");
  }
  std::vector<LabeledWindow> windows;
  windows.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Tensor w({steps, features});
    for (auto& v : w.data()) v = r.f64();
    windows.push_back(LabeledWindow{std::move(w), one_hot(labels[i])});
  }
  NormStats stats = read_norm_stats(r);
  std::array<std::uint64_t, 3> seen{};
  for (int l : labels) ++seen[static_cast<std::size_t>(l)];
  if (seen != counts) throw FormatError("window cache: per-class counts do not match labels");
  return {std::move(windows), std::move(stats)};
}

PreparedData prepare_dataset(const PerClass& per_class, const std::vector<std::string>& feature_names,
                             CategoricalMode mode, const PipelineConfig& cfg) {
  const PerClass balanced = balance_classes(per_class, cfg.chunk_size);
  std::vector<LabeledWindow> all;
  for (const auto& run : balanced) {
    auto windows = make_windows(run, cfg.window, cfg.stride, cfg.pure_windows);
    all.insert(all.end(), std::make_move_iterator(windows.begin()), std::make_move_iterator(windows.end()));
  }
  {
    Rng rng(derive_seed(cfg.seed, 1));
    const auto perm = rng_permutation(rng, all.size());
    std::vector<LabeledWindow> shuffled;
    shuffled.reserve(all.size());
    for (std::size_t i : perm) shuffled.push_back(std::move(all[i]));
    all = std::move(shuffled);
  }

  PreparedData data;
  std::vector<LabeledWindow> rest;
  if (cfg.test_fraction > 0.0) {
    std::tie(rest, data.test) = train_val_split(std::move(all), cfg.test_fraction, derive_seed(cfg.seed, 2));
  } else {
    rest = std::move(all);
  }
  const auto reduced = reduce_fraction(rest, cfg.reduce_fraction, derive_seed(cfg.seed, 3));
  std::tie(data.train, data.val) = train_val_split(reduced, cfg.val_fraction, derive_seed(cfg.seed, 4));
  if (data.train.empty() || data.val.empty()) throw DataError("prepare_dataset: too little data for train/val splits");

  data.norm = fit_minmax(data.train);
  data.norm.feature_names = feature_names;
  data.norm.categorical_mode = mode;
  apply_minmax(data.train, data.norm);
  apply_minmax(data.val, data.norm);
  apply_minmax(data.test, data.norm);
  return data;
}

}  // namespace gntm
