#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gntm/binary_io.hpp"
#include "gntm/tensor.hpp"

namespace gntm {

/// Canonical class order, frozen: Normal=0, DoS=1, DDoS=2.
inline const std::array<std::string, 3> kClassNames = {"Normal", "DoS", "DDoS"};

/// Malformed input data or schema.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FlowRecord {
  std::vector<double> features;
  int label = 0;
};

using PerClass = std::array<std::vector<FlowRecord>, 3>;

enum class CategoricalMode { hash, drop };

const char* to_string(CategoricalMode mode);
CategoricalMode parse_categorical_mode(const std::string& s);

/// Column handling for a CSV source. Stored as key-value text:
///
///   label_column = label
///   class.Normal = 0
///   class.DoS = 1
///   class.DDoS = 2
///   drop = stime,ltime
///   categorical = srcip,dstip,proto
///   categorical_mode = hash
struct CsvSchema {
  std::string label_column = "label";
  std::map<std::string, int> classes;
  std::vector<std::string> drop;
  std::vector<std::string> categorical;
  CategoricalMode mode = CategoricalMode::hash;

  static CsvSchema parse(const std::string& text);
  static CsvSchema load(const std::string& path);
  std::string serialize() const;
  void save(const std::string& path) const;
};

/// Stable FNV-1a hash of a string mapped into [0, 1).
double hash_bucket(const std::string& s);

/// Turns CSV lines into FlowRecords given a header line and a schema.
class CsvRowParser {
 public:
  /// `require_label` false lets unlabeled streams through (label reported as -1).
  CsvRowParser(const std::string& header_line, const CsvSchema& schema, bool require_label = true);

  const std::vector<std::string>& feature_names() const { return names_; }
  /// nullopt when a numeric cell does not parse or the column count is off.
  /// Unknown class names throw DataError.
  std::optional<FlowRecord> parse(const std::string& line) const;

 private:
  enum class Kind { numeric, categorical, skip };
  CsvSchema schema_;
  std::vector<Kind> kinds_;
  std::optional<std::size_t> label_col_;
  std::vector<std::string> names_;
};

struct IngestResult {
  std::vector<std::string> feature_names;
  std::vector<FlowRecord> records;
  std::size_t rejected = 0;
};

/// Reads a CSV with a header row. Rows with unparseable numeric cells are
/// rejected and counted; more than 10% rejected is a hard error.
IngestResult ingest_csv(const std::string& path, const CsvSchema& schema, bool require_label = true);
IngestResult ingest_csv(std::istream& in, const CsvSchema& schema, bool require_label = true);

/// Writes records with a header of feature names plus the schema's label
/// column holding class names; values use 17 significant digits.
void write_csv(const std::string& path, const std::vector<std::string>& feature_names,
               const std::vector<FlowRecord>& records, const CsvSchema& schema);

/// Per-feature min/max from the training split, plus the feature layout
/// they apply to.
struct NormStats {
  std::vector<double> min;
  std::vector<double> max;
  std::vector<std::string> feature_names;
  CategoricalMode categorical_mode = CategoricalMode::hash;

  std::size_t features() const { return min.size(); }
  /// (x − min)/(max − min) clamped to [0, 1]; constant features map to 0.
  double scale(std::size_t feature, double x) const;
  bool operator==(const NormStats&) const = default;
};

NormStats fit_minmax(const std::vector<FlowRecord>& records);
std::vector<FlowRecord> apply_minmax(const std::vector<FlowRecord>& records, const NormStats& stats);

Tensor one_hot(int label);

struct LabeledWindow {
  Tensor window;  // T × F
  Tensor label;   // one-hot, 3
  int class_id() const;
};

/// Contiguous windows; window k covers records [k·stride, k·stride + window)
/// and takes the label of its last record. With `pure_windows` set, windows
/// spanning more than one label are dropped.
std::vector<LabeledWindow> make_windows(const std::vector<FlowRecord>& records, std::size_t window = 10,
                                        std::size_t stride = 1, bool pure_windows = false);

NormStats fit_minmax(const std::vector<LabeledWindow>& windows);
void apply_minmax(std::vector<LabeledWindow>& windows, const NormStats& stats);
void apply_minmax(Tensor& window, const NormStats& stats);

/// Truncates each class to min(smallest class, chunk_size) records, merges
/// and shuffles with a seeded permutation.
std::vector<FlowRecord> chunk_balance(const PerClass& per_class, std::size_t chunk_size, std::uint64_t seed);

/// Same equalization rule as chunk_balance, keeping each class as its own
/// contiguous run (the leading records) so windows can be cut within runs.
PerClass balance_classes(const PerClass& per_class, std::size_t chunk_size);

/// Groups records by label, preserving their order.
PerClass group_by_class(const std::vector<FlowRecord>& records);

/// Seeded shuffle, then the last round(n·val_fraction) go to validation.
std::pair<std::vector<LabeledWindow>, std::vector<LabeledWindow>> train_val_split(std::vector<LabeledWindow> windows,
                                                                                  double val_fraction,
                                                                                  std::uint64_t seed);

/// Seeded uniform sample without replacement of round(n·fraction) windows.
std::vector<LabeledWindow> reduce_fraction(const std::vector<LabeledWindow>& windows, double fraction,
                                           std::uint64_t seed);

/// Independent seed for a named pipeline stage.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Desk-scale stand-in for the flow datasets.
struct SynthSpec {
  std::uint64_t seed = 7;
  std::size_t per_class = 2000;
  std::size_t features = 12;

  void validate() const;
};

/// Column names for a synthetic feature set: the signature features first
/// (pkt_rate, src_entropy, …), then aux_k.
std::vector<std::string> synth_feature_names(std::size_t features);

/// Index of the rate and source-entropy signature features.
inline constexpr std::size_t kRateFeature = 0;
inline constexpr std::size_t kSourceFeature = 1;

/// Three class-conditional streams, each an AR(1) process per feature:
///   Normal: stationary noise around the normal profile.
///   DoS: high pkt_rate with a periodic burst ramp, near-zero src_entropy.
///   DDoS: high pkt_rate with its own ramp, high src_entropy.
PerClass synth_generate(const SynthSpec& spec);

/// Window cache: "GNTM", version, kind, F, T, count, per-class counts,
/// labels, then the float64 payload and the NormStats block.
void save_window_cache(const std::string& path, const std::vector<LabeledWindow>& windows, const NormStats& stats);
std::pair<std::vector<LabeledWindow>, NormStats> load_window_cache(const std::string& path);

void write_norm_stats(BinaryWriter& w, const NormStats& stats);
NormStats read_norm_stats(BinaryReader& r);

struct PipelineConfig {
  std::size_t window = 10;
  std::size_t stride = 1;
  std::size_t chunk_size = 80000;
  double test_fraction = 0.2;
  double val_fraction = 0.2;
  double reduce_fraction = 0.2;
  bool pure_windows = false;
  std::uint64_t seed = 7;
};

struct PreparedData {
  NormStats norm;
  std::vector<LabeledWindow> train, val, test;
};

/// balance → window within each class run → shuffle → hold out the test
/// split → reduce → train/val split → fit min-max on train windows only and
/// apply it to all three splits.
PreparedData prepare_dataset(const PerClass& per_class, const std::vector<std::string>& feature_names,
                             CategoricalMode mode, const PipelineConfig& cfg);

}  // namespace gntm
