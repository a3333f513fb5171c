// Acceptance checks, one PASS/FAIL line per criterion.
//
//   rfbias_acceptance [path/to/airfoil.csv]
//
// The optional CSV enables the real-data check (last column is the target);
// without it that criterion is reported as SKIP. Exit status is non-zero if
// any gated criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rfbias/cli.hpp"
#include "rfbias/correction.hpp"
#include "rfbias/csv.hpp"
#include "rfbias/evaluation.hpp"
#include "rfbias/forest.hpp"
#include "rfbias/ols.hpp"
#include "rfbias/pure_forest.hpp"
#include "rfbias/runs_test.hpp"
#include "rfbias/serialize.hpp"

namespace fs = std::filesystem;
using namespace rfbias;

namespace {

const std::vector<double> kEq1 = {2, 3, 4, 5, 6, 7, 8, 9};
const std::vector<double> kEq3(8, 1.0);
constexpr std::uint64_t kSeeds[] = {1, 2, 3, 4, 5};
constexpr std::size_t kNoiseSettings[] = {0, 3};

int g_failures = 0;

void report(const std::string& status, const std::string& name, const std::string& detail) {
  std::cout << '[' << status << "] " << name << ": " << detail << '\n' << std::flush;
  if (status == "FAIL") ++g_failures;
}

void verdict(bool pass, const std::string& name, const std::string& detail) {
  report(pass ? "PASS" : "FAIL", name, detail);
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double runs_p(std::span<const double> pred, std::span<const double> truth) {
  const auto r = residual_runs_test(pred, truth);
  return r ? r->p_one_tailed : 1.0;
}

// One standard-forest run on Eq. 1 data: 5,000 points, 80/20 split,
// ntree 100, mtry p/3, nodesize 40.
struct ForestCase {
  std::size_t noise = 0;
  std::uint64_t seed = 0;
  DatasetSplit split;
  ForestModel model;
  std::vector<double> train_pred;
  std::vector<double> test_pred;
};

ForestParams bias_params(std::uint64_t seed) {
  ForestParams p;
  p.ntree = 100;
  p.mtry = ForestParams::default_mtry(kEq1.size());
  p.nodesize = 40;
  p.seed = seed;
  return p;
}

ForestCase run_forest_case(std::size_t noise, std::uint64_t seed) {
  ForestCase c;
  c.noise = noise;
  c.seed = seed;
  const Dataset data = generate_synthetic({kEq1, noise, 5000}, seed);
  c.split = split_dataset(data, {0.8, 0.0, 0.2, seed});
  c.model = train_forest(c.split.train, bias_params(seed));
  c.train_pred = predict_batch(c.model, c.split.train);
  c.test_pred = predict_batch(c.model, c.split.test);
  return c;
}

std::string case_label(const ForestCase& c) {
  return "noise " + std::to_string(c.noise) + " seed " + std::to_string(c.seed);
}

void criterion_ols() {
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset data = generate_synthetic({kEq1, 0, 5000}, 1);
  const auto parts = split_dataset(data, {0.8, 0.0, 0.2, 1});
  const LinearModel m = fit_ols(parts.train);
  std::vector<double> pred;
  for (std::size_t i = 0; i < parts.test.rows(); ++i) pred.push_back(predict_linear(m, parts.test.row(i)));
  const double test_mse = mse(pred, parts.test.target());
  double coef_err = std::abs(m.intercept);
  for (std::size_t j = 0; j < kEq1.size(); ++j) coef_err = std::max(coef_err, std::abs(m.coefficients[j] - kEq1[j]));
  const double secs = seconds_since(t0);
  verdict(test_mse < 1e-12 && coef_err <= 1e-8 && secs < 5.0, "1 OLS exactness",
          "test MSE " + fmt(test_mse) + " (< 1e-12), max coefficient error " + fmt(coef_err) + " (<= 1e-8), " +
              fmt(secs, 3) + " s (< 5)");
}

void criterion_bias(const std::vector<ForestCase>& cases, double secs) {
  bool pass = secs < 120.0;
  std::string detail;
  for (const auto& c : cases) {
    const double slope = fit_line(c.test_pred, c.split.test.target()).slope;
    const double r = pearson(c.test_pred, c.split.test.target());
    pass = pass && slope > 1.05 && r > 0.9;
    detail += case_label(c) + ": slope " + fmt(slope) + " r " + fmt(r) + "; ";
  }
  verdict(pass, "2 bias existence", detail + "need slope > 1.05 and r > 0.9 in every run; " + fmt(secs, 3) +
                                        " s for " + std::to_string(cases.size()) + " runs (< 120)");
}

void criterion_nonlinearity(const std::vector<ForestCase>& cases) {
  bool pass = true;
  std::string detail;
  std::map<std::size_t, int> significant;
  for (const auto& c : cases) {
    const double p = runs_p(c.test_pred, c.split.test.target());
    if (p < 0.05) ++significant[c.noise];
    if (c.seed == kSeeds[0]) {
      pass = pass && p < 0.05;
      detail += "noise " + std::to_string(c.noise) + ": p " + fmt(p) + " (n " + std::to_string(c.test_pred.size()) +
                "); ";
    }
  }
  detail += "need p < 0.05 for both noise settings at seed 1";
  detail += " [p < 0.05 in " + std::to_string(significant[0]) + "/5 seeds at noise 0, " +
            std::to_string(significant[3]) + "/5 at noise 3]";
  verdict(pass, "3 nonlinearity detection", detail);
}

// Not a gate: the same forests scored on a 100,000-point fresh test set.
void nonlinearity_at_large_n(const std::vector<ForestCase>& cases) {
  std::string detail;
  for (const auto& c : cases) {
    if (c.seed != kSeeds[0]) continue;
    const Dataset big = generate_synthetic({kEq1, c.noise, 100000}, 1000 + c.seed);
    const auto pred = predict_batch(c.model, big);
    const auto r = residual_runs_test(pred, big.target());
    detail += "noise " + std::to_string(c.noise) + ": z " + fmt(r ? r->z : 0.0) + " p " +
              fmt(r ? r->p_one_tailed : 1.0) + "; ";
  }
  report("INFO", "3 nonlinearity at n = 100000 (not a gate)", detail);
}

struct Corrected {
  std::vector<double> logit;
  std::vector<double> linear;
};

Corrected correct(const ForestCase& c) {
  const auto truths = c.split.train.target();
  const CorrectionModel logit = fit_correction(c.train_pred, truths, CorrectionFamily::logit);
  const CorrectionModel linear = fit_correction(c.train_pred, truths, CorrectionFamily::linear);
  return {apply_correction(logit, c.test_pred), apply_correction(linear, c.test_pred)};
}

void criterion_correction(const std::vector<ForestCase>& cases, const std::vector<Corrected>& corrected) {
  std::map<std::size_t, int> good;
  std::string detail;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    const auto truth = c.split.test.target();
    const double raw = mse(c.test_pred, truth);
    const double lo = mse(corrected[i].logit, truth);
    const double li = mse(corrected[i].linear, truth);
    const double p = runs_p(corrected[i].logit, truth);
    const bool ok = lo < raw && lo <= 1.05 * li && p >= 0.05;
    good[c.noise] += ok ? 1 : 0;
    detail += case_label(c) + ": raw " + fmt(raw) + " logit " + fmt(lo) + " linear " + fmt(li) + " p " + fmt(p) +
              (ok ? "" : " (miss)") + "; ";
  }
  const bool pass = good[0] >= 4 && good[3] >= 4;
  verdict(pass, "4 correction efficacy",
          detail + "need logit < raw, logit <= 1.05 x linear, p >= 0.05 in >= 4/5 seeds per noise setting (got " +
              std::to_string(good[0]) + " and " + std::to_string(good[3]) + ")");
}

PureForestParams pure_params(std::size_t leaf_min, std::uint64_t seed) {
  PureForestParams p;
  p.ntree = 500;
  p.leaf_min = leaf_min;
  p.seed = seed;
  return p;
}

void criterion_pure_forest() {
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset train = generate_synthetic({kEq3, 0, 10000}, 1);
  const Dataset fresh = generate_synthetic({kEq3, 0, 1000}, 2);

  const ForestModel coarse = train_pure_forest(train, pure_params(5, 1));
  const auto own = predict_batch(coarse, train);
  const double slope = fit_line(own, train.target()).slope;
  const double p = runs_p(own, train.target());

  const ForestModel fine = train_pure_forest(train, pure_params(1, 1));
  const double train_mse = mse(predict_batch(fine, train), train.target());
  const double test_mse = mse(predict_batch(fine, fresh), fresh.target());
  const double secs = seconds_since(t0);

  const bool pass = slope > 1.05 && p < 0.05 && train_mse < 1e-12 && test_mse >= 10.0 * train_mse && secs < 180.0;
  verdict(pass, "5 pure-forest diagnosis",
          "leaf_min 5: slope " + fmt(slope) + " (> 1.05), runs p " + fmt(p) + " (< 0.05); leaf_min 1: train MSE " +
              fmt(train_mse) + " (< 1e-12), fresh MSE " + fmt(test_mse) + " (>= 10x train); " + fmt(secs, 3) +
              " s (< 180)");
}

void criterion_range(const std::vector<ForestCase>& cases, const std::vector<Corrected>& corrected) {
  bool pass = true;
  std::string detail;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    if (c.seed != kSeeds[0]) continue;
    const auto truth = c.split.test.target();
    const auto [tmin, tmax] = std::minmax_element(truth.begin(), truth.end());
    const auto [pmin, pmax] = std::minmax_element(c.test_pred.begin(), c.test_pred.end());
    const auto [cmin, cmax] = std::minmax_element(corrected[i].logit.begin(), corrected[i].logit.end());
    const double coverage = (*cmax - *cmin) / (*tmax - *tmin);
    const bool inside = *pmin > *tmin && *pmax < *tmax;
    pass = pass && inside && coverage >= 0.9;
    detail += "noise " + std::to_string(c.noise) + ": truth [" + fmt(*tmin) + ", " + fmt(*tmax) + "], raw [" +
              fmt(*pmin) + ", " + fmt(*pmax) + "], corrected width " + fmt(coverage, 3) + " of truth; ";
  }
  verdict(pass, "6 range compression", detail + "need raw strictly inside truth range and corrected width >= 0.9");
}

// Run count of every arrangement of n_pos '+' and n_neg '-', via bitmasks.
std::map<std::size_t, double> enumerate_runs(std::size_t n_pos, std::size_t n_neg) {
  std::map<std::size_t, double> hist;
  const std::size_t n = n_pos + n_neg;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != n_pos) continue;
    std::size_t runs = 1;
    for (std::size_t i = 1; i < n; ++i) runs += ((mask >> i) & 1u) != ((mask >> (i - 1)) & 1u) ? 1 : 0;
    hist[runs] += 1.0;
  }
  return hist;
}

void criterion_runs_test() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::size_t n = 3; n <= 6; ++n) {
    const auto hist = enumerate_runs(n, n);
    double total = 0.0;
    for (const auto& [r, count] : hist) total += count;
    for (const auto& [r, count] : hist) {
      double below = 0.0;
      for (const auto& [r2, c2] : hist) below += r2 <= r ? c2 : 0.0;
      worst = std::max(worst, std::abs(runs_exact_cdf(n, n, r) - below / total));
      ++checked;
    }
  }
  const auto res = runs_test(parse_signs("+++---"));
  const double mu = runs_mean(3, 3);
  const double var = runs_variance(3, 3);
  const double secs = seconds_since(t0);
  const bool pass = worst <= 1e-12 && res.runs == 2 && std::abs(mu - 4.0) < 1e-12 && std::abs(var - 1.2) < 1e-12 &&
                    std::abs(res.z + 1.8257) <= 1e-3 && secs < 10.0;
  verdict(pass, "7 runs-test correctness",
          std::to_string(checked) + " (n, runs) cases, max |exact - enumeration| " + fmt(worst) +
              " (<= 1e-12); +++---: runs " + std::to_string(res.runs) + " mu " + fmt(mu) + " var " + fmt(var) +
              " z " + fmt(res.z, 6) + "; " + fmt(secs, 3) + " s (< 10)");
}

void criterion_airfoil(int argc, char** argv) {
  if (argc < 2) {
    report("SKIP", "8 real-data check", "no Airfoil CSV given (pass its path as the first argument)");
    return;
  }
  try {
    const csv::Table header = csv::read_table(argv[1]);
    const auto loaded = csv::load_csv(argv[1], header.header.back());
    int better = 0;
    bool in_band = true;
    std::string detail;
    for (std::uint64_t seed : kSeeds) {
      const auto parts = split_dataset(loaded.data, {0.8, 0.0, 0.2, seed});
      ForestParams p;
      p.ntree = 500;
      p.nodesize = 5;
      p.mtry = ForestParams::default_mtry(loaded.data.cols());
      p.seed = seed;
      const ForestModel m = train_forest(parts.train, p);
      const auto test_pred = predict_batch(m, parts.test);
      const CorrectionModel logit =
          fit_correction(predict_batch(m, parts.train), parts.train.target(), CorrectionFamily::logit);
      const double raw = mse(test_pred, parts.test.target());
      const double cor = mse(apply_correction(logit, test_pred), parts.test.target());
      in_band = in_band && raw >= 9.0 && raw <= 21.0;
      better += cor < raw ? 1 : 0;
      detail += "seed " + std::to_string(seed) + ": raw " + fmt(raw) + " logit " + fmt(cor) + "; ";
    }
    verdict(in_band && better >= 4, "8 real-data check",
            std::to_string(loaded.data.rows()) + " rows; " + detail + "need raw in [9, 21] and logit < raw in >= 4/5");
  } catch (const std::exception& e) {
    verdict(false, "8 real-data check", std::string("error: ") + e.what());
  }
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Writes the model, its test-set prediction CSV and (if given) a correction file.
std::vector<std::string> artifacts(const fs::path& dir, const ForestModel& m, const Dataset& test,
                                   const CorrectionModel* corr) {
  fs::create_directories(dir);
  io::save_forest(dir / "model.json", m);
  cli::PredictionTable t;
  for (std::size_t i = 0; i < test.rows(); ++i) t.row.push_back(i);
  t.truth.emplace(test.target().begin(), test.target().end());
  const auto pred = predict_batch(m, test);
  t.add("prediction", pred);
  if (corr) t.add("corrected", apply_correction(*corr, pred));
  cli::write_predictions(dir / "predictions.csv", t);
  std::vector<std::string> out{slurp(dir / "model.json"), slurp(dir / "predictions.csv")};
  if (corr) {
    io::save_correction(dir / "correction.json", *corr);
    out.push_back(slurp(dir / "correction.json"));
  }
  return out;
}

void criterion_determinism() {
  const fs::path root = fs::temp_directory_path() / "rfbias_acceptance";
  fs::remove_all(root);
  bool pass = true;
  std::string detail;

  // standard forest + logit correction, repeated with a different thread count
  auto standard = [&](const std::string& tag, std::size_t threads) {
    const Dataset data = generate_synthetic({kEq1, 3, 5000}, 1);
    const auto parts = split_dataset(data, {0.8, 0.0, 0.2, 1});
    const ForestModel m = train_forest(parts.train, bias_params(1), threads);
    const CorrectionModel c =
        fit_correction(predict_batch(m, parts.train), parts.train.target(), CorrectionFamily::logit);
    return artifacts(root / tag, m, parts.test, &c);
  };
  const auto s1 = standard("standard_a", 1);
  const auto s2 = standard("standard_b", 4);
  pass = pass && s1 == s2;
  detail += std::string("standard forest + correction ") + (s1 == s2 ? "identical" : "DIFFER") + "; ";

  auto pure = [&](const std::string& tag, std::size_t threads) {
    const Dataset train = generate_synthetic({kEq3, 0, 10000}, 1);
    const Dataset fresh = generate_synthetic({kEq3, 0, 1000}, 2);
    PureForestParams p = pure_params(5, 1);
    p.ntree = 100;
    return artifacts(root / tag, train_pure_forest(train, p, threads), fresh, nullptr);
  };
  const auto p1 = pure("pure_a", 1);
  const auto p2 = pure("pure_b", 3);
  pass = pass && p1 == p2;
  detail += std::string("pure forest ") + (p1 == p2 ? "identical" : "DIFFER") + "; ";

  // the end-to-end command line, twice
  auto pipeline = [&](const std::string& tag) {
    std::ostringstream out, err;
    const int code = cli::run_cli({"pipeline", "--coeffs", "2,3,4,5,6,7,8,9", "--n", "5000", "--ntree", "100",
                                   "--nodesize", "40", "--seed", "1", "--out-dir", (root / tag).string()},
                                  out, err);
    if (code != 0) return std::vector<std::string>{"exit " + std::to_string(code) + ": " + err.str()};
    return std::vector<std::string>{slurp(root / tag / "model.json"), slurp(root / tag / "predictions.csv"),
                                    slurp(root / tag / "correction.json")};
  };
  const auto c1 = pipeline("cli_a");
  const auto c2 = pipeline("cli_b");
  const bool cli_ok = c1 == c2 && c1.size() == 3;
  pass = pass && cli_ok;
  detail += std::string("CLI pipeline ") + (cli_ok ? "identical" : "DIFFER");

  fs::remove_all(root);
  verdict(pass, "9 determinism", detail);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    criterion_ols();

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<ForestCase> cases;
    for (std::size_t noise : kNoiseSettings) {
      for (std::uint64_t seed : kSeeds) cases.push_back(run_forest_case(noise, seed));
    }
    criterion_bias(cases, seconds_since(t0));
    criterion_nonlinearity(cases);
    nonlinearity_at_large_n(cases);

    std::vector<Corrected> corrected;
    for (const auto& c : cases) corrected.push_back(correct(c));
    criterion_correction(cases, corrected);

    criterion_pure_forest();
    criterion_range(cases, corrected);
    criterion_runs_test();
    criterion_airfoil(argc, argv);
    criterion_determinism();
  } catch (const std::exception& e) {
    report("FAIL", "acceptance run aborted", e.what());
  }
  std::cout << (g_failures == 0 ? "all gated criteria passed" : std::to_string(g_failures) + " criterion/criteria failed")
            << '\n';
  return g_failures == 0 ? 0 : 1;
}
