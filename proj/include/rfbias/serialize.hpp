#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rfbias/correction.hpp"
#include "rfbias/csv.hpp"
#include "rfbias/error.hpp"
#include "rfbias/evaluation.hpp"
#include "rfbias/forest_model.hpp"

namespace rfbias::io {

using json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

namespace detail {

inline void require_format(const json& doc, const char* expected) {
  if (!doc.is_object() || doc.value("format", "") != expected) {
    throw DataError(std::string("not a '") + expected + "' document");
  }
  if (doc.value("version", 0) != kFormatVersion) {
    throw DataError(std::string("unsupported ") + expected + " version " + doc.value("version", json()).dump());
  }
}

/// Preorder: split -> ["S", feature, cutoff], leaf -> ["L", prediction, count].
inline void encode_preorder(const RegressionTree& tree, std::size_t i, json& out) {
  const TreeNode& n = tree.nodes()[i];
  if (n.is_leaf()) {
    out.push_back(json::array({"L", n.prediction, n.count}));
    return;
  }
  out.push_back(json::array({"S", n.feature, n.cutoff}));
  encode_preorder(tree, static_cast<std::size_t>(n.left), out);
  encode_preorder(tree, static_cast<std::size_t>(n.right), out);
}

inline std::int32_t decode_preorder(const json& items, std::size_t& pos, std::vector<TreeNode>& nodes,
                                    std::size_t n_features) {
  if (pos >= items.size()) throw DataError("model: truncated tree encoding");
  const json& item = items[pos++];
  if (!item.is_array() || item.size() != 3 || !item[0].is_string()) throw DataError("model: malformed tree node");
  const auto id = static_cast<std::int32_t>(nodes.size());
  nodes.emplace_back();
  const std::string tag = item[0].get<std::string>();
  if (tag == "L") {
    nodes[static_cast<std::size_t>(id)].prediction = item[1].get<double>();
    nodes[static_cast<std::size_t>(id)].count = item[2].get<std::size_t>();
    return id;
  }
  if (tag != "S") throw DataError("model: unknown node tag '" + tag + "'");
  const auto feature = item[1].get<std::int32_t>();
  if (feature < 0 || static_cast<std::size_t>(feature) >= n_features) {
    throw DataError("model: split feature index out of range");
  }
  const double cutoff = item[2].get<double>();
  const std::int32_t left = decode_preorder(items, pos, nodes, n_features);
  const std::int32_t right = decode_preorder(items, pos, nodes, n_features);
  TreeNode& n = nodes[static_cast<std::size_t>(id)];
  n.feature = feature;
  n.cutoff = cutoff;
  n.left = left;
  n.right = right;
  return id;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
}

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

}  // namespace detail

inline json to_json(const ForestModel& model) {
  json params;
  if (const auto* p = std::get_if<ForestParams>(&model.params)) {
    params = {{"ntree", p->ntree},
              {"mtry", p->mtry},
              {"nodesize", p->nodesize},
              {"max_terminal_nodes", p->max_terminal_nodes ? json(*p->max_terminal_nodes) : json()},
              {"bootstrap", p->bootstrap},
              {"seed", p->seed}};
  } else {
    const auto& q = std::get<PureForestParams>(model.params);
    params = {{"ntree", q.ntree}, {"leaf_min", q.leaf_min}, {"seed", q.seed}};
  }
  json trees = json::array();
  for (const auto& tree : model.trees) {
    json items = json::array();
    detail::encode_preorder(tree, 0, items);
    trees.push_back(std::move(items));
  }
  return {{"format", "rfbias-forest"}, {"version", kFormatVersion},    {"family", to_string(model.family())},
          {"params", params},          {"feature_names", model.feature_names}, {"target_name", model.target_name},
          {"trees", trees}};
}

inline ForestModel forest_from_json(const json& doc) {
  detail::require_format(doc, "rfbias-forest");
  try {
    ForestModel model;
    model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    model.target_name = doc.at("target_name").get<std::string>();
    const json& p = doc.at("params");
    const std::string family = doc.at("family").get<std::string>();
    if (family == "standard") {
      ForestParams fp;
      fp.ntree = p.at("ntree").get<std::size_t>();
      fp.mtry = p.at("mtry").get<std::size_t>();
      fp.nodesize = p.at("nodesize").get<std::size_t>();
      if (!p.at("max_terminal_nodes").is_null()) fp.max_terminal_nodes = p.at("max_terminal_nodes").get<std::size_t>();
      fp.bootstrap = p.at("bootstrap").get<bool>();
      fp.seed = p.at("seed").get<std::uint64_t>();
      model.params = fp;
    } else if (family == "pure") {
      PureForestParams pp;
      pp.ntree = p.at("ntree").get<std::size_t>();
      pp.leaf_min = p.at("leaf_min").get<std::size_t>();
      pp.seed = p.at("seed").get<std::uint64_t>();
      model.params = pp;
    } else {
      throw DataError("model: unknown forest family '" + family + "'");
    }
    for (const json& items : doc.at("trees")) {
      std::vector<TreeNode> nodes;
      std::size_t pos = 0;
      detail::decode_preorder(items, pos, nodes, model.feature_names.size());
      if (pos != items.size()) throw DataError("model: trailing nodes after tree");
      model.trees.emplace_back(std::move(nodes));
    }
    if (model.trees.empty()) throw DataError("model: no trees");
    return model;
  } catch (const json::exception& e) {
    throw DataError(std::string("model: malformed document: ") + e.what());
  }
}

inline json to_json(const CorrectionModel& m) {
  return {{"format", "rfbias-correction"},
          {"version", kFormatVersion},
          {"family", to_string(m.family)},
          {"a", m.a},
          {"b", m.b},
          {"c", m.c},
          {"d", m.d},
          {"fit_sse", m.fit_sse},
          {"n_points", m.n_points},
          {"x_min", m.x_min},
          {"x_max", m.x_max},
          {"warning", m.warning}};
}

inline CorrectionModel correction_from_json(const json& doc) {
  detail::require_format(doc, "rfbias-correction");
  try {
    CorrectionModel m;
    m.family = parse_family(doc.at("family").get<std::string>());
    m.a = doc.at("a").get<double>();
    m.b = doc.at("b").get<double>();
    m.c = doc.at("c").get<double>();
    m.d = doc.at("d").get<double>();
    m.fit_sse = doc.at("fit_sse").get<double>();
    m.n_points = doc.at("n_points").get<std::size_t>();
    m.x_min = doc.at("x_min").get<double>();
    m.x_max = doc.at("x_max").get<double>();
    m.warning = doc.at("warning").get<bool>();
    if (!(m.a > 0.0)) throw DataError("correction: parameter a must be > 0");
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("correction: malformed document: ") + e.what());
  }
}

inline json to_json(const EvaluationReport& r) {
  json runs;
  if (r.runs_test) {
    const auto& t = *r.runs_test;
    runs = {{"n_pos", t.n_pos}, {"n_neg", t.n_neg}, {"runs", t.runs},
            {"z", t.z},         {"p_one_tailed", t.p_one_tailed}, {"method", to_string(t.method)}};
  }
  return {{"format", "rfbias-report"},
          {"version", kFormatVersion},
          {"n", r.n},
          {"mse", r.mse},
          {"slope", r.slope},
          {"intercept", r.intercept},
          {"runs_test", runs},
          {"truth_range", {r.truth_range.min, r.truth_range.max}},
          {"prediction_range", {r.prediction_range.min, r.prediction_range.max}}};
}

inline const char* kReportCsvHeader =
    "column,n,mse,slope,intercept,runs_n_pos,runs_n_neg,runs,runs_z,runs_p_one_tailed,runs_method,"
    "truth_min,truth_max,prediction_min,prediction_max";

/// One CSV row matching kReportCsvHeader; runs fields are empty when the test is absent.
inline std::string to_csv_row(const std::string& column, const EvaluationReport& r) {
  using csv::format_double;
  std::ostringstream os;
  os << column << ',' << r.n << ',' << format_double(r.mse) << ',' << format_double(r.slope) << ','
     << format_double(r.intercept) << ',';
  if (r.runs_test) {
    const auto& t = *r.runs_test;
    os << t.n_pos << ',' << t.n_neg << ',' << t.runs << ',' << format_double(t.z) << ','
       << format_double(t.p_one_tailed) << ',' << to_string(t.method) << ',';
  } else {
    os << ",,,,,,";
  }
  os << format_double(r.truth_range.min) << ',' << format_double(r.truth_range.max) << ','
     << format_double(r.prediction_range.min) << ',' << format_double(r.prediction_range.max);
  return os.str();
}

inline void save_forest(const std::filesystem::path& path, const ForestModel& m) {
  detail::write_text(path, to_json(m).dump() + "\n");
}
inline ForestModel load_forest(const std::filesystem::path& path) { return forest_from_json(detail::read_json(path)); }

inline void save_correction(const std::filesystem::path& path, const CorrectionModel& m) {
  detail::write_text(path, to_json(m).dump(2) + "\n");
}
inline CorrectionModel load_correction(const std::filesystem::path& path) {
  return correction_from_json(detail::read_json(path));
}

}  // namespace rfbias::io
