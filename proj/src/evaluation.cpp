#include "gntm/evaluation.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gntm/data.hpp"

namespace gntm {

using nlohmann::json;

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (const auto& row : counts) n += std::accumulate(row.begin(), row.end(), std::size_t{0});
  return n;
}

std::size_t ConfusionMatrix::row_sum(std::size_t c) const {
  return std::accumulate(counts[c].begin(), counts[c].end(), std::size_t{0});
}

std::size_t ConfusionMatrix::column_sum(std::size_t c) const {
  std::size_t n = 0;
  for (const auto& row : counts) n += row[c];
  return n;
}

ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& truths) {
  if (preds.size() != truths.size()) {
    throw std::invalid_argument("confusion: " + std::to_string(preds.size()) + " predictions vs " +
                                std::to_string(truths.size()) + " labels");
  }
  if (preds.empty()) throw std::invalid_argument("confusion: no predictions");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] < 0 || preds[i] > 2 || truths[i] < 0 || truths[i] > 2)
      throw std::invalid_argument("confusion: class id out of range at index " + std::to_string(i));
    ++cm.counts[static_cast<std::size_t>(truths[i])][static_cast<std::size_t>(preds[i])];
  }
  return cm;
}

namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

Metrics metrics(const ConfusionMatrix& cm) {
  Metrics m;
  double trace = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    const double tp = static_cast<double>(cm.counts[c][c]);
    const double fp = static_cast<double>(cm.column_sum(c)) - tp;
    const double fn = static_cast<double>(cm.row_sum(c)) - tp;
    ClassMetrics& k = m.per_class[c];
    k.precision = ratio(tp, tp + fp);
    k.recall = ratio(tp, tp + fn);
    k.f1 = ratio(2.0 * k.precision * k.recall, k.precision + k.recall);
    m.macro.precision += k.precision / 3.0;
    m.macro.recall += k.recall / 3.0;
    m.macro.f1 += k.f1 / 3.0;
    trace += tp;
  }
  m.accuracy = ratio(trace, static_cast<double>(cm.total()));
  return m;
}

RocCurve roc_binary(const std::vector<double>& scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) throw std::invalid_argument("roc_binary: scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const auto pos = static_cast<double>(std::count(positive.begin(), positive.end(), true));
  const double neg = static_cast<double>(positive.size()) - pos;

  RocCurve curve;
  curve.points.push_back({0.0, 0.0});
  double tp = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == threshold; ++i) (positive[order[i]] ? tp : fp) += 1.0;
    curve.points.push_back({ratio(fp, neg), ratio(tp, pos)});
  }
  if (pos > 0.0 && neg > 0.0) {
    double area = 0.0;
    for (std::size_t k = 1; k < curve.points.size(); ++k) {
      const RocPoint& a = curve.points[k - 1];
      const RocPoint& b = curve.points[k];
      area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
    }
    curve.auc = area;
  }
  return curve;
}

std::array<RocCurve, 3> roc_auc(const std::vector<Tensor>& probs, const std::vector<int>& truths) {
  if (probs.size() != truths.size()) throw std::invalid_argument("roc_auc: scores and labels differ in length");
  std::array<RocCurve, 3> out;
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<double> scores(probs.size());
    std::vector<bool> positive(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i].size() != 3) throw DimensionError("roc_auc: probability vectors must have 3 entries");
      scores[i] = probs[i][c];
      positive[i] = truths[i] == static_cast<int>(c);
    }
    out[c] = roc_binary(scores, positive);
  }
  return out;
}

EvalReport build_report(const std::vector<Tensor>& probs, const std::vector<int>& truths) {
  std::vector<int> preds;
  preds.reserve(probs.size());
  for (const auto& p : probs) preds.push_back(static_cast<int>(argmax(p)));
  EvalReport r;
  r.confusion = confusion(preds, truths);
  r.metrics = metrics(r.confusion);
  r.roc = roc_auc(probs, truths);
  r.windows = probs.size();
  for (std::size_t c = 0; c < 3; ++c) {
    const double tp = static_cast<double>(r.confusion.counts[c][c]);
    const double fp = static_cast<double>(r.confusion.column_sum(c)) - tp;
    const double positives = static_cast<double>(r.confusion.row_sum(c));
    const double negatives = static_cast<double>(r.windows) - positives;
    r.operating[c] = {ratio(tp, positives), ratio(fp, negatives)};
  }
  return r;
}

EvalReport evaluate(const ModelParams& p, const ModelConfig& cfg, const std::vector<LabeledWindow>& data) {
  std::vector<Tensor> probs;
  std::vector<int> truths;
  probs.reserve(data.size());
  truths.reserve(data.size());
  for (const auto& lw : data) {
    probs.push_back(forward(p, cfg, lw.window));
    truths.push_back(lw.class_id());
  }
  return build_report(probs, truths);
}

namespace {

json class_metrics_json(const ClassMetrics& k) {
  return json{{"precision", k.precision}, {"recall", k.recall}, {"f1", k.f1}};
}

ClassMetrics class_metrics_from(const json& j) {
  return ClassMetrics{j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f1").get<double>()};
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
  json j;
  j["classes"] = kClassNames;
  j["windows"] = report.windows;
  j["accuracy"] = report.metrics.accuracy;
  j["macro"] = class_metrics_json(report.metrics.macro);
  json confusion = json::array();
  for (const auto& row : report.confusion.counts) confusion.push_back(row);
  j["confusion"] = confusion;
  json per_class = json::object();
  for (std::size_t c = 0; c < 3; ++c) {
    json k = class_metrics_json(report.metrics.per_class[c]);
    k["auc"] = report.roc[c].auc ? json(*report.roc[c].auc) : json(nullptr);
    k["tpr"] = report.operating[c].tpr;
    k["fpr"] = report.operating[c].fpr;
    json points = json::array();
    for (const auto& pt : report.roc[c].points) points.push_back({pt.fpr, pt.tpr});
    k["roc"] = points;
    per_class[kClassNames[c]] = k;
  }
  j["per_class"] = per_class;
  return j.dump(2) + "\n";
}

EvalReport parse_report_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    EvalReport r;
    r.windows = j.at("windows").get<std::size_t>();
    r.metrics.accuracy = j.at("accuracy").get<double>();
    r.metrics.macro = class_metrics_from(j.at("macro"));
    const auto& confusion = j.at("confusion");
    if (confusion.size() != 3) throw std::runtime_error("confusion must have 3 rows");
    for (std::size_t t = 0; t < 3; ++t) {
      if (confusion[t].size() != 3) throw std::runtime_error("confusion rows must have 3 entries");
      for (std::size_t p = 0; p < 3; ++p) r.confusion.counts[t][p] = confusion[t][p].get<std::size_t>();
    }
    for (std::size_t c = 0; c < 3; ++c) {
      const json& k = j.at("per_class").at(kClassNames[c]);
      r.metrics.per_class[c] = class_metrics_from(k);
      if (!k.at("auc").is_null()) r.roc[c].auc = k.at("auc").get<double>();
      r.operating[c] = {k.at("tpr").get<double>(), k.at("fpr").get<double>()};
      for (const auto& pt : k.at("roc")) r.roc[c].points.push_back({pt.at(0).get<double>(), pt.at(1).get<double>()});
    }
    return r;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed report: ") + e.what());
  }
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

void emit_report(const EvalReport& report, const std::string& dir, const std::vector<EpochLog>& logs) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir + ": " + ec.message());
  const fs::path base(dir);

  {
    const auto path = base / "report.json";
    auto out = open_out(path);
    out << report_to_json(report);
    finish(out, path);
  }
  {
    const auto path = base / "confusion.csv";
    auto out = open_out(path);
    out << "true\\pred";
    for (const auto& n : kClassNames) out << ',' << n;
    out << '\n';
    for (std::size_t t = 0; t < 3; ++t) {
      out << kClassNames[t];
      for (std::size_t p = 0; p < 3; ++p) out << ',' << report.confusion.counts[t][p];
      out << '\n';
    }
    finish(out, path);
  }
  char line[64];
  for (std::size_t c = 0; c < 3; ++c) {
    const auto path = base / ("roc_" + kClassNames[c] + ".csv");
    auto out = open_out(path);
    out << "fpr,tpr\n";
    for (const auto& pt : report.roc[c].points) {
      std::snprintf(line, sizeof(line), "%.17g,%.17g\n", pt.fpr, pt.tpr);
      out << line;
    }
    finish(out, path);
  }
  if (!logs.empty()) {
    const auto path = base / "curves.csv";
    auto out = open_out(path);
    write_epoch_log(out, logs);
    finish(out, path);
  }
}

std::string summary_line(const EvalReport& report) {
  char buf[256];
  auto auc = [&](std::size_t c) { return report.roc[c].auc ? *report.roc[c].auc : -1.0; };
  std::snprintf(buf, sizeof(buf), "accuracy=%.4f macro_f1=%.4f auc[Normal]=%.4f auc[DoS]=%.4f auc[DDoS]=%.4f",
                report.metrics.accuracy, report.metrics.macro.f1, auc(0), auc(1), auc(2));
  std::string s = buf;
  if (!report.roc[0].auc || !report.roc[1].auc || !report.roc[2].auc) s += " (auc -1 means undefined)";
  return s;
}

}  // namespace gntm
