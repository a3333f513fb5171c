#pragma once

// Command-line front end. Each stage reads and writes plain files, so every
// workflow is a composition of subcommands; `pipeline` chains them.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rfbias/correction.hpp"
#include "rfbias/csv.hpp"
#include "rfbias/dataset.hpp"
#include "rfbias/error.hpp"
#include "rfbias/evaluation.hpp"
#include "rfbias/forest.hpp"
#include "rfbias/pure_forest.hpp"
#include "rfbias/serialize.hpp"

namespace rfbias::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2 };

/// Columns of a predictions file that are not prediction-like.
inline constexpr const char* kRowColumn = "row";
inline constexpr const char* kTruthColumn = "truth";

/// A predictions CSV: row index, optional truth, then one column per
/// prediction variant (`prediction`, `corrected`, ...).
struct PredictionTable {
  std::vector<std::size_t> row;
  std::optional<std::vector<double>> truth;
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  const std::vector<double>& column(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw DataError("predictions file has no column '" + name + "'");
    return columns[static_cast<std::size_t>(it - names.begin())];
  }

  void add(const std::string& name, std::vector<double> values) {
    auto it = std::find(names.begin(), names.end(), name);
    if (it != names.end()) {
      columns[static_cast<std::size_t>(it - names.begin())] = std::move(values);
    } else {
      names.push_back(name);
      columns.push_back(std::move(values));
    }
  }

  const std::vector<double>& require_truth() const {
    if (!truth) throw DataError("predictions file has no 'truth' column");
    return *truth;
  }
};

inline PredictionTable read_predictions(const fs::path& path) {
  const csv::Table t = csv::read_table(path);
  const auto row_col = t.column(kRowColumn);
  if (!row_col) throw DataError("'" + path.string() + "' has no 'row' column");
  const auto truth_col = t.column(kTruthColumn);
  PredictionTable out;
  std::vector<std::size_t> value_cols;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (c == *row_col || (truth_col && c == *truth_col)) continue;
    out.names.push_back(t.header[c]);
    value_cols.push_back(c);
  }
  out.columns.resize(value_cols.size());
  if (truth_col) out.truth.emplace();
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& cells = t.rows[r];
    auto cell = [&](std::size_t c) {
      auto v = c < cells.size() ? csv::parse_double(cells[c]) : std::nullopt;
      if (!v) throw DataError("'" + path.string() + "' line " + std::to_string(r + 2) + ": bad numeric cell");
      return *v;
    };
    out.row.push_back(static_cast<std::size_t>(cell(*row_col)));
    if (truth_col) out.truth->push_back(cell(*truth_col));
    for (std::size_t k = 0; k < value_cols.size(); ++k) out.columns[k].push_back(cell(value_cols[k]));
  }
  return out;
}

inline void write_predictions(const fs::path& path, const PredictionTable& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << kRowColumn;
  if (p.truth) out << ',' << kTruthColumn;
  for (const auto& n : p.names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < p.row.size(); ++i) {
    out << p.row[i];
    if (p.truth) out << ',' << csv::format_double((*p.truth)[i]);
    for (const auto& col : p.columns) out << ',' << csv::format_double(col[i]);
    out << '\n';
  }
}

/// Rows of a numeric CSV restricted to `feature_names` (in that order); the
/// target column is optional. Row numbers (0-based, data rows only) are kept.
struct ScoringData {
  Dataset data;
  std::vector<std::size_t> row_numbers;
  bool has_truth = false;
};

inline ScoringData load_for_scoring(const fs::path& path, const std::vector<std::string>& feature_names,
                                    const std::string& target_name) {
  const csv::Table t = csv::read_table(path);
  std::vector<std::size_t> cols;
  for (const auto& name : feature_names) {
    auto c = t.column(name);
    if (!c) throw DataError("'" + path.string() + "' lacks model feature column '" + name + "'");
    cols.push_back(*c);
  }
  const auto target_col = t.column(target_name);
  std::vector<double> f;
  std::vector<double> y;
  ScoringData out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& cells = t.rows[r];
    std::vector<double> values;
    bool ok = cells.size() == t.header.size();
    for (std::size_t c : cols) {
      if (!ok) break;
      auto v = csv::parse_double(cells[c]);
      ok = v.has_value();
      if (ok) values.push_back(*v);
    }
    std::optional<double> truth;
    if (ok && target_col) {
      truth = csv::parse_double(cells[*target_col]);
      ok = truth.has_value();
    }
    if (!ok) continue;
    f.insert(f.end(), values.begin(), values.end());
    y.push_back(truth.value_or(0.0));
    out.row_numbers.push_back(r);
  }
  out.data = Dataset(std::move(f), std::move(y), feature_names, target_name);
  out.has_truth = target_col.has_value();
  return out;
}

inline PredictionTable predict_file(const ForestModel& model, const fs::path& data_path) {
  ScoringData sd = load_for_scoring(data_path, model.feature_names, model.target_name);
  PredictionTable p;
  p.row = sd.row_numbers;
  if (sd.has_truth) p.truth.emplace(sd.data.target().begin(), sd.data.target().end());
  p.add("prediction", predict_batch(model, sd.data));
  return p;
}

namespace detail {

inline std::string fixed(double v, int precision = 4) {
  std::ostringstream os;
  os << std::setprecision(precision) << std::fixed << v;
  return os.str();
}

inline std::string general(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

struct Options {
  // shared
  std::uint64_t seed = 1;
  std::size_t threads = default_thread_count();
  // synth
  std::vector<double> coeffs;
  std::size_t noise_terms = 0;
  std::size_t n = 0;
  // data
  std::string in;
  std::string out;
  std::string out_dir;
  std::string target = "target";
  std::vector<std::string> categorical;
  // split
  double train_fraction = 0.8;
  double validation_fraction = 0.0;
  double test_fraction = 0.2;
  // train
  std::string forest = "standard";
  std::size_t ntree = 500;
  std::optional<std::size_t> mtry;
  std::size_t nodesize = 5;
  std::optional<std::size_t> max_nodes;
  bool no_bootstrap = false;
  std::size_t leaf_min = 5;
  // predict / correction
  std::string model;
  std::string data;
  std::string train_csv;
  std::string validation_csv;
  std::string fit_on = "train";
  std::string family = "logit";
  std::string correction;
  std::string predictions;
  std::string source = "prediction";
  std::string column;
  std::string format = "text";
  std::string corrected = "corrected";
};

inline void add_forest_flags(CLI::App* sub, Options& o) {
  sub->add_option("--forest", o.forest, "Forest family")->check(CLI::IsMember({"standard", "pure"}));
  sub->add_option("--ntree", o.ntree, "Number of trees");
  sub->add_option("--mtry", o.mtry, "Candidate features per split (default max(1, p/3))");
  sub->add_option("--nodesize", o.nodesize, "Minimum rows per child (standard forest)");
  sub->add_option("--max-nodes", o.max_nodes, "Maximum terminal nodes per tree (standard forest)");
  sub->add_flag("--no-bootstrap", o.no_bootstrap, "Grow every tree on all rows (standard forest)");
  sub->add_option("--leaf-min", o.leaf_min, "Minimum rows per leaf (pure forest)");
  sub->add_option("--threads", o.threads, "Worker threads for training");
}

inline ForestModel train_from_options(const Dataset& train, const Options& o) {
  if (o.threads < 1) throw ValidationError("--threads must be >= 1");
  if (o.forest == "pure") {
    PureForestParams p{o.ntree, o.leaf_min, o.seed};
    p.validate();
    return train_pure_forest(train, p, o.threads);
  }
  ForestParams p;
  p.ntree = o.ntree;
  p.mtry = o.mtry.value_or(ForestParams::default_mtry(train.cols()));
  p.nodesize = o.nodesize;
  p.max_terminal_nodes = o.max_nodes;
  p.bootstrap = !o.no_bootstrap;
  p.seed = o.seed;
  p.validate(train.cols());
  return train_forest(train, p, o.threads);
}

inline SplitSpec split_from_options(const Options& o) {
  SplitSpec s{o.train_fraction, o.validation_fraction, o.test_fraction, o.seed};
  s.validate();
  return s;
}

inline void print_family_table(std::ostream& out, const std::vector<FamilyFit>& fits) {
  out << "family   fit_sse          a            b            c            d\n";
  for (const auto& f : fits) {
    out << std::left << std::setw(9) << to_string(f.family);
    if (!f.model) {
      out << "failed: " << f.error << '\n';
      continue;
    }
    const auto& m = *f.model;
    out << std::setw(17) << general(m.fit_sse) << std::setw(13) << general(m.a) << std::setw(13) << general(m.b)
        << std::setw(13) << general(m.c) << general(m.d) << (m.warning ? "  (not converged)" : "") << '\n';
  }
  out << std::right;
}

struct EvaluatedColumn {
  std::string name;
  EvaluationReport report;
};

inline std::vector<EvaluatedColumn> evaluate_table(const PredictionTable& p) {
  const auto& truth = p.require_truth();
  std::vector<EvaluatedColumn> out;
  for (std::size_t k = 0; k < p.names.size(); ++k) out.push_back({p.names[k], evaluate(p.columns[k], truth)});
  return out;
}

/// Console table: one row per prediction column, the MSE row laid out like
/// "original | linear-corrected | logit-corrected".
inline void print_evaluation(std::ostream& out, const std::vector<EvaluatedColumn>& cols) {
  out << "column           n        MSE          slope    intercept  runs_p      pred_range\n";
  for (const auto& c : cols) {
    const auto& r = c.report;
    out << std::left << std::setw(17) << c.name << std::setw(9) << r.n << std::setw(13) << general(r.mse)
        << std::setw(9) << fixed(r.slope) << std::setw(11) << fixed(r.intercept) << std::setw(12)
        << (r.runs_test ? general(r.runs_test->p_one_tailed) : std::string("n/a")) << '[' << general(r.prediction_range.min)
        << ", " << general(r.prediction_range.max) << "]\n";
  }
  out << std::right << "MSE:";
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out << (i == 0 ? " " : " | ") << (cols[i].name == "prediction" ? std::string("original") : cols[i].name) << ' '
        << general(cols[i].report.mse);
  }
  out << '\n';
}

inline void write_report(const fs::path& path, const std::vector<EvaluatedColumn>& cols, const std::string& format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  if (format == "csv") {
    out << io::kReportCsvHeader << '\n';
    for (const auto& c : cols) out << io::to_csv_row(c.name, c.report) << '\n';
    return;
  }
  io::json doc = {{"format", "rfbias-evaluation"}, {"version", io::kFormatVersion}};
  io::json reports = io::json::array();
  for (const auto& c : cols) reports.push_back({{"column", c.name}, {"report", io::to_json(c.report)}});
  doc["columns"] = reports;
  out << doc.dump(2) << '\n';
}

/// truth, raw, corrected, residual_raw, residual_corrected sorted by raw
/// prediction (ties keep file order). Residuals are truth minus value.
inline void write_plot_data(const fs::path& path, const std::vector<double>& truth, const std::vector<double>& raw,
                            const std::vector<double>& corrected) {
  std::vector<std::size_t> order(raw.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return raw[a] < raw[b]; });
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "truth,raw,corrected,residual_raw,residual_corrected\n";
  using csv::format_double;
  for (std::size_t i : order) {
    out << format_double(truth[i]) << ',' << format_double(raw[i]) << ',' << format_double(corrected[i]) << ','
        << format_double(truth[i] - raw[i]) << ',' << format_double(truth[i] - corrected[i]) << '\n';
  }
}

inline CorrectionModel fit_and_report(std::ostream& out, std::span<const double> x, std::span<const double> y,
                                      const std::string& family) {
  const auto fits = fit_all_families(x, y);
  print_family_table(out, fits);
  if (family == "auto") {
    auto [chosen, model] = select_best_fit(y, fits);
    out << "selected family: " << to_string(chosen) << '\n';
    return model;
  }
  const CorrectionFamily f = parse_family(family);
  for (const auto& fit : fits) {
    if (fit.family == f) {
      if (!fit.model) throw DataError("fit-correction: " + fit.error);
      return *fit.model;
    }
  }
  throw DataError("fit-correction: family not fitted");
}

}  // namespace detail

/// Runs one CLI invocation. `args` excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  using detail::Options;
  Options o;
  CLI::App app{"Random-forest regression with toward-the-mean bias diagnosis and correction", "rfbias"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "Write a synthetic linear dataset");
  synth->add_option("--coeffs", o.coeffs, "Comma-separated feature coefficients")->delimiter(',')->required();
  synth->add_option("--noise-terms", o.noise_terms, "Hidden standard-normal addends");
  synth->add_option("--n", o.n, "Number of rows")->required();
  synth->add_option("--seed", o.seed, "Random seed");
  synth->add_option("--out", o.out, "Output CSV")->required();

  auto* split = app.add_subcommand("split", "Partition a CSV into train/validation/test CSVs");
  split->add_option("--in", o.in, "Input CSV")->required();
  split->add_option("--target", o.target, "Target column");
  split->add_option("--categorical", o.categorical, "Columns to one-hot encode")->delimiter(',');
  split->add_option("--train", o.train_fraction, "Training fraction");
  split->add_option("--validation", o.validation_fraction, "Validation fraction");
  split->add_option("--test", o.test_fraction, "Test fraction");
  split->add_option("--seed", o.seed, "Random seed");
  split->add_option("--out-dir", o.out_dir, "Directory for train.csv, validation.csv, test.csv")->required();

  auto* train = app.add_subcommand("train", "Train a forest and write the model file");
  train->add_option("--train", o.train_csv, "Training CSV")->required();
  train->add_option("--target", o.target, "Target column");
  train->add_option("--seed", o.seed, "Random seed");
  train->add_option("--out", o.out, "Model file")->required();
  detail::add_forest_flags(train, o);

  auto* predict_cmd = app.add_subcommand("predict", "Score a CSV with a model");
  predict_cmd->add_option("--model", o.model, "Model file")->required();
  predict_cmd->add_option("--data", o.data, "CSV to score")->required();
  predict_cmd->add_option("--out", o.out, "Predictions CSV")->required();

  auto* fit = app.add_subcommand("fit-correction", "Fit a bias-correction curve on model predictions");
  fit->add_option("--model", o.model, "Model file")->required();
  fit->add_option("--train", o.train_csv, "Training CSV");
  fit->add_option("--validation", o.validation_csv, "Validation CSV");
  fit->add_option("--fit-on", o.fit_on, "Which set to fit on")->check(CLI::IsMember({"train", "validation"}));
  fit->add_option("--family", o.family, "Correction family")
      ->check(CLI::IsMember({"logit", "linear", "sinh", "tan", "auto"}));
  fit->add_option("--out", o.out, "Correction file")->required();

  auto* apply = app.add_subcommand("apply-correction", "Apply a correction to a predictions CSV");
  apply->add_option("--correction", o.correction, "Correction file")->required();
  apply->add_option("--predictions", o.predictions, "Predictions CSV")->required();
  apply->add_option("--source", o.source, "Column holding raw predictions");
  apply->add_option("--column", o.column, "Name of the added column (default: corrected)");
  apply->add_option("--out", o.out, "Output CSV")->required();

  auto* eval = app.add_subcommand("evaluate", "Report MSE, line fit and runs test per prediction column");
  eval->add_option("--predictions", o.predictions, "Predictions CSV")->required();
  eval->add_option("--out", o.out, "Report file");
  eval->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"text", "csv"}));

  auto* plot = app.add_subcommand("plot-data", "Export plot-ready truth/raw/corrected data");
  plot->add_option("--predictions", o.predictions, "Predictions CSV")->required();
  plot->add_option("--source", o.source, "Raw prediction column");
  plot->add_option("--corrected", o.corrected, "Corrected prediction column");
  plot->add_option("--out", o.out, "Output CSV")->required();

  auto* pipe = app.add_subcommand("pipeline", "Split, train, correct and evaluate in one run");
  pipe->add_option("--data", o.data, "Input CSV (omit to synthesize)");
  pipe->add_option("--target", o.target, "Target column");
  pipe->add_option("--categorical", o.categorical, "Columns to one-hot encode")->delimiter(',');
  pipe->add_option("--coeffs", o.coeffs, "Synthetic coefficients when --data is absent")->delimiter(',');
  pipe->add_option("--noise-terms", o.noise_terms, "Synthetic hidden noise terms");
  pipe->add_option("--n", o.n, "Synthetic row count");
  pipe->add_option("--train", o.train_fraction, "Training fraction");
  pipe->add_option("--validation", o.validation_fraction, "Validation fraction");
  pipe->add_option("--test", o.test_fraction, "Test fraction");
  pipe->add_option("--fit-on", o.fit_on, "Set used to fit the correction")->check(CLI::IsMember({"train", "validation"}));
  pipe->add_option("--family", o.family, "Correction family")
      ->check(CLI::IsMember({"logit", "linear", "sinh", "tan", "auto"}));
  pipe->add_option("--seed", o.seed, "Random seed");
  pipe->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"text", "csv"}));
  pipe->add_option("--out-dir", o.out_dir, "Output directory")->required();
  detail::add_forest_flags(pipe, o);

  std::vector<std::string> argv_store{"rfbias"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (synth->parsed()) {
      SyntheticSpec spec{o.coeffs, o.noise_terms, o.n};
      spec.validate();
      const Dataset d = generate_synthetic(spec, o.seed);
      csv::write_dataset(o.out, d);
      out << "wrote " << d.rows() << " rows x " << d.cols() << " features to " << o.out << '\n';
    } else if (split->parsed()) {
      const SplitSpec spec = detail::split_from_options(o);
      const auto loaded = csv::load_csv(o.in, o.target, o.categorical);
      if (loaded.dropped_rows > 0) err << "warning: dropped " << loaded.dropped_rows << " incomplete row(s)\n";
      const auto parts = split_dataset(loaded.data, spec);
      fs::create_directories(o.out_dir);
      csv::write_dataset(fs::path(o.out_dir) / "train.csv", parts.train);
      if (!parts.validation.empty()) csv::write_dataset(fs::path(o.out_dir) / "validation.csv", parts.validation);
      csv::write_dataset(fs::path(o.out_dir) / "test.csv", parts.test);
      out << "train " << parts.train.rows() << ", validation " << parts.validation.rows() << ", test "
          << parts.test.rows() << " rows written to " << o.out_dir << '\n';
    } else if (train->parsed()) {
      const auto loaded = csv::load_csv(o.train_csv, o.target);
      if (loaded.dropped_rows > 0) err << "warning: dropped " << loaded.dropped_rows << " incomplete row(s)\n";
      const ForestModel model = detail::train_from_options(loaded.data, o);
      io::save_forest(o.out, model);
      out << "trained " << to_string(model.family()) << " forest of " << model.trees.size() << " trees on "
          << loaded.data.rows() << " rows; model written to " << o.out << '\n';
    } else if (predict_cmd->parsed()) {
      const ForestModel model = io::load_forest(o.model);
      const PredictionTable p = predict_file(model, o.data);
      write_predictions(o.out, p);
      out << "wrote " << p.row.size() << " predictions to " << o.out << '\n';
    } else if (fit->parsed()) {
      std::string fit_path = o.fit_on == "validation" ? o.validation_csv : o.train_csv;
      if (o.fit_on == "validation" && (fit_path.empty() || !fs::exists(fit_path))) {
        throw DataError("--fit-on validation requires an existing --validation CSV (the split had none?)");
      }
      if (fit_path.empty()) throw DataError("--fit-on train requires --train");
      const ForestModel model = io::load_forest(o.model);
      const PredictionTable p = predict_file(model, fit_path);
      if (p.row.empty()) throw DataError("fit set '" + fit_path + "' has no usable rows");
      const auto& truth = p.require_truth();
      const CorrectionModel m = detail::fit_and_report(out, p.column("prediction"), truth, o.family);
      io::save_correction(o.out, m);
      out << "fitted " << to_string(m.family) << " correction on " << o.fit_on << " set (" << m.n_points
          << " points, SSE " << detail::general(m.fit_sse) << "); written to " << o.out << '\n';
      if (m.warning) err << "warning: optimizer did not converge within its iteration budget\n";
    } else if (apply->parsed()) {
      const CorrectionModel m = io::load_correction(o.correction);
      PredictionTable p = read_predictions(o.predictions);
      const std::string name = o.column.empty() ? "corrected" : o.column;
      p.add(name, apply_correction(m, p.column(o.source)));
      write_predictions(o.out, p);
      out << "added column '" << name << "' (" << to_string(m.family) << ") to " << o.out << '\n';
    } else if (eval->parsed()) {
      const PredictionTable p = read_predictions(o.predictions);
      const auto cols = detail::evaluate_table(p);
      detail::print_evaluation(out, cols);
      if (!o.out.empty()) detail::write_report(o.out, cols, o.format);
    } else if (plot->parsed()) {
      const PredictionTable p = read_predictions(o.predictions);
      detail::write_plot_data(o.out, p.require_truth(), p.column(o.source), p.column(o.corrected));
      out << "wrote plot data to " << o.out << '\n';
    } else if (pipe->parsed()) {
      const SplitSpec spec = detail::split_from_options(o);
      Dataset data;
      if (!o.data.empty()) {
        const auto loaded = csv::load_csv(o.data, o.target, o.categorical);
        if (loaded.dropped_rows > 0) err << "warning: dropped " << loaded.dropped_rows << " incomplete row(s)\n";
        data = loaded.data;
      } else {
        SyntheticSpec s{o.coeffs, o.noise_terms, o.n};
        s.validate();
        data = generate_synthetic(s, o.seed);
      }
      if (o.fit_on == "validation" && !(o.validation_fraction > 0.0)) {
        throw DataError("--fit-on validation requires --validation > 0");
      }
      const auto parts = split_dataset(data, spec);
      const fs::path dir(o.out_dir);
      fs::create_directories(dir);
      csv::write_dataset(dir / "train.csv", parts.train);
      if (!parts.validation.empty()) csv::write_dataset(dir / "validation.csv", parts.validation);
      csv::write_dataset(dir / "test.csv", parts.test);

      const ForestModel model = detail::train_from_options(parts.train, o);
      io::save_forest(dir / "model.json", model);
      const Dataset& fit_set = o.fit_on == "validation" ? parts.validation : parts.train;
      const auto fit_pred = predict_batch(model, fit_set);
      const CorrectionModel linear = fit_correction(fit_pred, fit_set.target(), CorrectionFamily::linear);
      const CorrectionModel chosen = detail::fit_and_report(out, fit_pred, fit_set.target(), o.family);
      io::save_correction(dir / "correction_linear.json", linear);
      io::save_correction(dir / "correction.json", chosen);

      PredictionTable p;
      p.row.resize(parts.test.rows());
      std::iota(p.row.begin(), p.row.end(), std::size_t{0});
      p.truth.emplace(parts.test.target().begin(), parts.test.target().end());
      const auto raw = predict_batch(model, parts.test);
      p.add("prediction", raw);
      p.add("linear", apply_correction(linear, raw));
      if (chosen.family != CorrectionFamily::linear) {
        p.add(std::string(to_string(chosen.family)), apply_correction(chosen, raw));
      }
      write_predictions(dir / "predictions.csv", p);
      const auto cols = detail::evaluate_table(p);
      detail::print_evaluation(out, cols);
      detail::write_report(dir / (o.format == "csv" ? "report.csv" : "report.json"), cols, o.format);
      detail::write_plot_data(dir / "plot.csv", *p.truth, raw, p.columns.back());
      out << "outputs written to " << o.out_dir << '\n';
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kOk;
}

}  // namespace rfbias::cli
