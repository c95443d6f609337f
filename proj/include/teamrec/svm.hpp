#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "teamrec/error.hpp"
#include "teamrec/parallel.hpp"
#include "teamrec/textio.hpp"

namespace teamrec {

enum class Kernel { Linear, Rbf };

struct SvmConfig {
  int feature_len = 1;
  int n_classes = 2;
  Kernel kernel = Kernel::Linear;
  double gamma = 1.0;  // rbf only
  double c = 1.0;
  double tol = 1e-3;
  int max_passes = 100;

  void validate() const {
    if (feature_len < 1) throw ConfigError("svm feature_len must be >= 1");
    if (n_classes < 2) throw ConfigError("svm needs >= 2 classes");
    if (kernel == Kernel::Rbf && !(gamma > 0.0)) throw ConfigError("rbf gamma must be > 0");
    if (!(c > 0.0)) throw ConfigError("svm c must be > 0");
    if (!(tol > 0.0)) throw ConfigError("svm tol must be > 0");
    if (max_passes < 1) throw ConfigError("svm max_passes must be >= 1");
  }
};

struct SvmBinary {
  std::vector<std::vector<double>> sv;  // support vectors, original index order
  std::vector<double> coef;             // alpha_i * y_i
  double bias = 0.0;
};

struct SvmModel {
  SvmConfig cfg;
  std::vector<SvmBinary> sub;  // one-vs-rest, indexed by class
};

// Per-sub-model training diagnostics, mainly for tests.
struct SvmTrainReport {
  struct Sub {
    std::vector<double> alpha;   // over all training examples
    double bias = 0.0;
    double dual_objective = 0.0;
    double max_kkt_violation = 0.0;
    int sweeps = 0;
  };
  std::vector<Sub> sub;
};

namespace detail {

inline double kernel_eval(const SvmConfig& cfg, const std::vector<double>& a, const std::vector<double>& b) {
  if (cfg.kernel == Kernel::Linear) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  }
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    d2 += d * d;
  }
  return std::exp(-cfg.gamma * d2);
}

// Simplified sequential-scan SMO for one binary problem (labels +/-1).
// Deterministic: examples are visited in index order and the partner is the
// max-|E_i - E_j| index (ties to the lowest); when that pair makes no
// progress the remaining partners are tried in index order.
struct SmoProblem {
  const SvmConfig& cfg;
  const std::vector<std::vector<double>>& x;
  const std::vector<int>& y;  // +1 / -1
  std::vector<std::vector<double>> gram;
  std::vector<double> alpha;
  double b = 0.0;
  int sweeps = 0;

  SmoProblem(const SvmConfig& cfg_, const std::vector<std::vector<double>>& x_, const std::vector<int>& y_)
      : cfg(cfg_), x(x_), y(y_) {
    const std::size_t m = x.size();
    gram.assign(m, std::vector<double>(m));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j <= i; ++j) gram[i][j] = gram[j][i] = kernel_eval(cfg, x[i], x[j]);
    alpha.assign(m, 0.0);
  }

  double f(std::size_t i) const {  // decision value on training point i
    double s = 0.0;
    for (std::size_t j = 0; j < alpha.size(); ++j)
      if (alpha[j] != 0.0) s += alpha[j] * y[j] * gram[j][i];
    return s + b;
  }

  bool try_pair(std::size_t i, std::size_t j, double Ei) {
    if (i == j) return false;
    const double Ej = f(j) - y[j];
    const double C = cfg.c;
    double L, H;
    if (y[i] != y[j]) {
      L = std::max(0.0, alpha[j] - alpha[i]);
      H = std::min(C, C + alpha[j] - alpha[i]);
    } else {
      L = std::max(0.0, alpha[i] + alpha[j] - C);
      H = std::min(C, alpha[i] + alpha[j]);
    }
    if (L >= H) return false;
    const double eta = 2.0 * gram[i][j] - gram[i][i] - gram[j][j];
    if (eta >= 0.0) return false;
    const double aj_old = alpha[j];
    const double ai_old = alpha[i];
    double aj = aj_old - y[j] * (Ei - Ej) / eta;
    aj = std::clamp(aj, L, H);
    if (std::abs(aj - aj_old) < 1e-7) return false;
    const double ai = ai_old + y[i] * y[j] * (aj_old - aj);
    alpha[i] = ai;
    alpha[j] = aj;
    const double b1 = b - Ei - y[i] * (ai - ai_old) * gram[i][i] - y[j] * (aj - aj_old) * gram[i][j];
    const double b2 = b - Ej - y[i] * (ai - ai_old) * gram[i][j] - y[j] * (aj - aj_old) * gram[j][j];
    if (ai > 0.0 && ai < C) b = b1;
    else if (aj > 0.0 && aj < C) b = b2;
    else b = (b1 + b2) / 2.0;
    return true;
  }

  void solve() {
    const std::size_t m = x.size();
    for (sweeps = 1; sweeps <= cfg.max_passes; ++sweeps) {
      int changed = 0;
      for (std::size_t i = 0; i < m; ++i) {
        const double Ei = f(i) - y[i];
        const double r = Ei * y[i];
        const bool violates = (r < -cfg.tol && alpha[i] < cfg.c) || (r > cfg.tol && alpha[i] > 0.0);
        if (!violates) continue;
        std::size_t best_j = m;
        double best_gap = -1.0;
        for (std::size_t j = 0; j < m; ++j) {
          if (j == i) continue;
          const double gap = std::abs(Ei - (f(j) - y[j]));
          if (gap > best_gap) best_gap = gap, best_j = j;
        }
        bool updated = best_j < m && try_pair(i, best_j, Ei);
        if (!updated) {
          for (std::size_t j = 0; j < m && !updated; ++j)
            if (j != best_j) updated = try_pair(i, j, Ei);
        }
        if (updated) ++changed;
      }
      if (changed == 0) break;
    }
    sweeps = std::min(sweeps, cfg.max_passes);
  }

  double dual_objective() const {
    double obj = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) obj += alpha[i];
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      if (alpha[i] == 0.0) continue;
      for (std::size_t j = 0; j < alpha.size(); ++j)
        if (alpha[j] != 0.0) obj -= 0.5 * alpha[i] * alpha[j] * y[i] * y[j] * gram[i][j];
    }
    return obj;
  }

  double max_kkt_violation() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      const double margin = y[i] * f(i);
      double v;
      if (alpha[i] <= 1e-12) v = std::max(0.0, 1.0 - margin);
      else if (alpha[i] >= cfg.c - 1e-12) v = std::max(0.0, margin - 1.0);
      else v = std::abs(margin - 1.0);
      worst = std::max(worst, v);
    }
    return worst;
  }
};

}  // namespace detail

inline SvmModel svm_train(const std::vector<std::vector<double>>& x, const std::vector<int>& y, const SvmConfig& cfg,
                          const Backend& backend = Backend::sequential(), SvmTrainReport* report = nullptr) {
  cfg.validate();
  if (x.size() != y.size()) throw InvalidArgument("svm_train: |x| != |y|");
  if (x.size() < 2) throw InvalidArgument("svm_train needs >= 2 examples");
  std::vector<int> per_class(static_cast<std::size_t>(cfg.n_classes), 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (static_cast<int>(x[i].size()) != cfg.feature_len)
      throw InvalidArgument("svm_train: example " + std::to_string(i) + " has wrong feature length");
    for (double v : x[i])
      if (std::isnan(v)) throw InvalidArgument("svm_train: NaN feature in example " + std::to_string(i));
    if (y[i] < 0 || y[i] >= cfg.n_classes)
      throw InvalidArgument("svm_train: label " + std::to_string(y[i]) + " outside [0," +
                            std::to_string(cfg.n_classes) + ")");
    per_class[static_cast<std::size_t>(y[i])] += 1;
  }
  for (int k = 0; k < cfg.n_classes; ++k)
    if (per_class[static_cast<std::size_t>(k)] == 0)
      throw InvalidArgument("svm_train: class " + std::to_string(k) + " has no examples");

  if (report) report->sub.assign(static_cast<std::size_t>(cfg.n_classes), {});

  // One-vs-rest sub-models are independent problems; train them as parallel
  // tasks.
  std::vector<int> classes(static_cast<std::size_t>(cfg.n_classes));
  for (int k = 0; k < cfg.n_classes; ++k) classes[static_cast<std::size_t>(k)] = k;
  auto subs = parallel_map(
      classes,
      [&](int k) {
        std::vector<int> yk(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) yk[i] = y[i] == k ? +1 : -1;
        detail::SmoProblem prob(cfg, x, yk);
        prob.solve();
        SvmBinary bin;
        bin.bias = prob.b;
        for (std::size_t i = 0; i < x.size(); ++i) {
          if (prob.alpha[i] > 0.0) {
            bin.sv.push_back(x[i]);
            bin.coef.push_back(prob.alpha[i] * yk[i]);
          }
        }
        if (report) {
          auto& r = (*report).sub[static_cast<std::size_t>(k)];
          r.alpha = prob.alpha;
          r.bias = prob.b;
          r.dual_objective = prob.dual_objective();
          r.max_kkt_violation = prob.max_kkt_violation();
          r.sweeps = prob.sweeps;
        }
        return bin;
      },
      backend);

  SvmModel model;
  model.cfg = cfg;
  model.sub = std::move(subs);
  return model;
}

// Decision value of one sub-model: fixed sequential reduction over support
// vectors so results are bit-stable across backends.
inline double svm_decision(const SvmModel& model, int cls, const std::vector<double>& x) {
  const SvmBinary& bin = model.sub[static_cast<std::size_t>(cls)];
  double s = 0.0;
  for (std::size_t i = 0; i < bin.sv.size(); ++i) s += bin.coef[i] * detail::kernel_eval(model.cfg, bin.sv[i], x);
  return s + bin.bias;
}

struct SvmPrediction {
  int label = 0;
  std::vector<double> decisions;
};

inline SvmPrediction svm_predict(const SvmModel& model, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != model.cfg.feature_len)
    throw InvalidArgument("svm_predict: feature length " + std::to_string(x.size()) + " != model feature_len " +
                          std::to_string(model.cfg.feature_len));
  SvmPrediction out;
  out.decisions.resize(model.sub.size());
  for (std::size_t k = 0; k < model.sub.size(); ++k) out.decisions[k] = svm_decision(model, static_cast<int>(k), x);
  out.label = 0;
  for (std::size_t k = 1; k < out.decisions.size(); ++k)
    if (out.decisions[k] > out.decisions[static_cast<std::size_t>(out.label)]) out.label = static_cast<int>(k);
  return out;
}

inline std::vector<int> svm_decision_batch(const SvmModel& model, const std::vector<std::vector<double>>& xs,
                                           const Backend& backend = Backend::sequential()) {
  return parallel_map(
      xs, [&](const std::vector<double>& x) { return svm_predict(model, x).label; }, backend);
}

// ---------------------------------------------------------------------------
// Serialization: versioned UTF-8 text, doubles at 17 significant digits.
// ---------------------------------------------------------------------------

inline std::string format_svm(const SvmModel& model) {
  using detail::fmt_g17;
  std::string out = "svm v1\n";
  out += "kernel ";
  out += model.cfg.kernel == Kernel::Linear ? "linear" : ("rbf " + fmt_g17(model.cfg.gamma));
  out += "\n";
  out += "c " + fmt_g17(model.cfg.c) + "\n";
  out += "feature_len " + std::to_string(model.cfg.feature_len) + "\n";
  out += "n_classes " + std::to_string(model.cfg.n_classes) + "\n";
  for (std::size_t k = 0; k < model.sub.size(); ++k) {
    const SvmBinary& bin = model.sub[k];
    out += "submodel " + std::to_string(k) + " sv " + std::to_string(bin.sv.size()) + "\n";
    for (std::size_t i = 0; i < bin.sv.size(); ++i) {
      out += fmt_g17(bin.coef[i]);
      for (double v : bin.sv[i]) out += " " + fmt_g17(v);
      out += "\n";
    }
    out += "bias " + fmt_g17(bin.bias) + "\n";
  }
  return out;
}

inline SvmModel parse_svm(const std::string& text, const std::string& source = "<memory>") {
  using detail::expect_token;
  using detail::read_value;
  std::istringstream in(text);
  expect_token(in, "svm", source);
  expect_token(in, "v1", source);
  SvmModel model;
  expect_token(in, "kernel", source);
  const auto kind = read_value<std::string>(in, "kernel kind", source);
  if (kind == "linear") {
    model.cfg.kernel = Kernel::Linear;
  } else if (kind == "rbf") {
    model.cfg.kernel = Kernel::Rbf;
    model.cfg.gamma = read_value<double>(in, "gamma", source);
  } else {
    throw IoError("unknown kernel '" + kind + "' in " + source);
  }
  expect_token(in, "c", source);
  model.cfg.c = read_value<double>(in, "c", source);
  expect_token(in, "feature_len", source);
  model.cfg.feature_len = read_value<int>(in, "feature_len", source);
  expect_token(in, "n_classes", source);
  model.cfg.n_classes = read_value<int>(in, "n_classes", source);
  model.cfg.validate();
  model.sub.resize(static_cast<std::size_t>(model.cfg.n_classes));
  for (int k = 0; k < model.cfg.n_classes; ++k) {
    expect_token(in, "submodel", source);
    const int idx = read_value<int>(in, "submodel index", source);
    if (idx != k) throw IoError("submodel " + std::to_string(k) + " out of order in " + source);
    expect_token(in, "sv", source);
    const int n_sv = read_value<int>(in, "sv count", source);
    if (n_sv < 0) throw IoError("negative sv count in " + source);
    SvmBinary& bin = model.sub[static_cast<std::size_t>(k)];
    bin.sv.resize(static_cast<std::size_t>(n_sv));
    bin.coef.resize(static_cast<std::size_t>(n_sv));
    for (int i = 0; i < n_sv; ++i) {
      bin.coef[static_cast<std::size_t>(i)] = read_value<double>(in, "coef", source);
      auto& v = bin.sv[static_cast<std::size_t>(i)];
      v.resize(static_cast<std::size_t>(model.cfg.feature_len));
      for (int d = 0; d < model.cfg.feature_len; ++d) v[static_cast<std::size_t>(d)] = read_value<double>(in, "sv value", source);
    }
    expect_token(in, "bias", source);
    bin.bias = read_value<double>(in, "bias", source);
  }
  return model;
}

inline void save_svm(const SvmModel& model, const std::filesystem::path& path) {
  detail::spit(path, format_svm(model));
}

inline SvmModel load_svm(const std::filesystem::path& path) { return parse_svm(detail::slurp(path), path.string()); }

}  // namespace teamrec
