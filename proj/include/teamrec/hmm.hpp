#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "teamrec/discretize.hpp"
#include "teamrec/error.hpp"
#include "teamrec/parallel.hpp"
#include "teamrec/rng.hpp"
#include "teamrec/textio.hpp"

namespace teamrec {

struct HmmModel {
  int n_states = 0;
  int m_symbols = 0;
  std::vector<double> pi;               // n
  std::vector<std::vector<double>> a;   // n x n
  std::vector<std::vector<double>> b;   // n x m
  std::string action_name;

  void validate(double tol = 1e-9) const {
    if (n_states < 1 || m_symbols < 1) throw InvalidArgument("hmm model needs n_states >= 1 and m_symbols >= 1");
    auto check_row = [&](const std::vector<double>& row, std::size_t len, const std::string& what) {
      if (row.size() != len) throw InvalidArgument("hmm " + what + " has wrong length");
      double s = 0.0;
      for (double v : row) {
        if (v < 0.0 || std::isnan(v)) throw InvalidArgument("hmm " + what + " has a negative or NaN entry");
        s += v;
      }
      if (std::abs(s - 1.0) > tol) throw InvalidArgument("hmm " + what + " does not sum to 1 (sum=" + std::to_string(s) + ")");
    };
    check_row(pi, static_cast<std::size_t>(n_states), "pi");
    if (a.size() != static_cast<std::size_t>(n_states) || b.size() != static_cast<std::size_t>(n_states))
      throw InvalidArgument("hmm matrices have wrong row count");
    for (int i = 0; i < n_states; ++i) {
      check_row(a[static_cast<std::size_t>(i)], static_cast<std::size_t>(n_states), "a row " + std::to_string(i));
      check_row(b[static_cast<std::size_t>(i)], static_cast<std::size_t>(m_symbols), "b row " + std::to_string(i));
    }
  }
};

struct HmmConfig {
  int n_states = 5;
  int m_symbols = 2;
  int block_size = 16;   // parallel tile width; never changes numerics
  int max_iters = 100;
  double ll_tol = 1e-6;  // relative log-likelihood convergence
  double floor = 1e-9;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_states < 1) throw ConfigError("hmm n_states must be >= 1");
    if (m_symbols < 1) throw ConfigError("hmm m_symbols must be >= 1");
    if (block_size < 1) throw ConfigError("hmm block_size must be >= 1");
    if (max_iters < 1) throw ConfigError("hmm max_iters must be >= 1");
    if (!(ll_tol >= 0.0)) throw ConfigError("hmm ll_tol must be >= 0");
    if (!(floor > 0.0)) throw ConfigError("hmm floor must be > 0");
  }
};

// Uniform pi, random row-stochastic a and b. EM is init-sensitive, so this is
// the one blessed initializer: entries drawn in [0.05, 1) keep every
// probability safely positive.
inline HmmModel init_random_hmm(const HmmConfig& cfg, const std::string& action_name = "") {
  cfg.validate();
  Rng rng(cfg.seed);
  HmmModel m;
  m.n_states = cfg.n_states;
  m.m_symbols = cfg.m_symbols;
  m.action_name = action_name;
  m.pi.assign(static_cast<std::size_t>(cfg.n_states), 1.0 / cfg.n_states);
  auto random_row = [&](std::size_t len) {
    std::vector<double> row(len);
    double s = 0.0;
    for (double& v : row) {
      v = rng.uniform(0.05, 1.0);
      s += v;
    }
    for (double& v : row) v /= s;
    return row;
  };
  m.a.resize(static_cast<std::size_t>(cfg.n_states));
  m.b.resize(static_cast<std::size_t>(cfg.n_states));
  for (int i = 0; i < cfg.n_states; ++i) {
    m.a[static_cast<std::size_t>(i)] = random_row(static_cast<std::size_t>(cfg.n_states));
    m.b[static_cast<std::size_t>(i)] = random_row(static_cast<std::size_t>(cfg.m_symbols));
  }
  return m;
}

namespace detail {
inline void check_obs(const HmmModel& m, const std::vector<int>& obs) {
  if (obs.empty()) throw InvalidArgument("observation sequence must be non-empty");
  for (int o : obs)
    if (o < 0 || o >= m.m_symbols)
      throw InvalidArgument("observation symbol " + std::to_string(o) + " outside alphabet of size " +
                            std::to_string(m.m_symbols));
}
}  // namespace detail

struct ForwardResult {
  double log_likelihood = 0.0;
  std::vector<std::vector<double>> alpha;  // per-step normalized lattice
  std::vector<double> scale;               // step mass before normalization; ll = sum of logs
};

// Scaled forward recursion. All reductions run in ascending state index, so
// the result is bit-stable everywhere.
inline ForwardResult forward(const HmmModel& m, const std::vector<int>& obs) {
  detail::check_obs(m, obs);
  const int n = m.n_states;
  const std::size_t T = obs.size();
  ForwardResult r;
  r.alpha.assign(T, std::vector<double>(static_cast<std::size_t>(n), 0.0));
  r.scale.assign(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    const auto o = static_cast<std::size_t>(obs[t]);
    double mass = 0.0;
    for (int j = 0; j < n; ++j) {
      double v;
      if (t == 0) {
        v = m.pi[static_cast<std::size_t>(j)] * m.b[static_cast<std::size_t>(j)][o];
      } else {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += r.alpha[t - 1][static_cast<std::size_t>(i)] * m.a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        v = acc * m.b[static_cast<std::size_t>(j)][o];
      }
      r.alpha[t][static_cast<std::size_t>(j)] = v;
      mass += v;
    }
    r.scale[t] = mass;
    if (mass <= 0.0) {  // the model gives this prefix probability zero
      r.log_likelihood = -std::numeric_limits<double>::infinity();
      return r;
    }
    for (int j = 0; j < n; ++j) r.alpha[t][static_cast<std::size_t>(j)] /= mass;
    r.log_likelihood += std::log(mass);
  }
  return r;
}

inline ForwardResult forward(const HmmModel& m, const ObservationSequence& obs) {
  if (obs.m != m.m_symbols)
    throw InvalidArgument("observation alphabet " + std::to_string(obs.m) + " != model m_symbols " +
                          std::to_string(m.m_symbols));
  return forward(m, obs.symbols);
}

struct ViterbiResult {
  std::vector<int> path;
  double log_prob = 0.0;
};

// Max-product in log space; every argmax tie falls to the lower state index.
inline ViterbiResult viterbi(const HmmModel& m, const std::vector<int>& obs) {
  detail::check_obs(m, obs);
  const int n = m.n_states;
  const std::size_t T = obs.size();
  const double ninf = -std::numeric_limits<double>::infinity();
  auto lg = [&](double v) { return v > 0.0 ? std::log(v) : ninf; };

  std::vector<std::vector<double>> delta(T, std::vector<double>(static_cast<std::size_t>(n), ninf));
  std::vector<std::vector<int>> psi(T, std::vector<int>(static_cast<std::size_t>(n), 0));
  for (int j = 0; j < n; ++j)
    delta[0][static_cast<std::size_t>(j)] =
        lg(m.pi[static_cast<std::size_t>(j)]) + lg(m.b[static_cast<std::size_t>(j)][static_cast<std::size_t>(obs[0])]);
  for (std::size_t t = 1; t < T; ++t) {
    for (int j = 0; j < n; ++j) {
      double best = ninf;
      int arg = 0;
      for (int i = 0; i < n; ++i) {
        const double v = delta[t - 1][static_cast<std::size_t>(i)] + lg(m.a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
        if (v > best) best = v, arg = i;  // strict >: ties keep the lower index
      }
      delta[t][static_cast<std::size_t>(j)] = best + lg(m.b[static_cast<std::size_t>(j)][static_cast<std::size_t>(obs[t])]);
      psi[t][static_cast<std::size_t>(j)] = arg;
    }
  }
  ViterbiResult r;
  int last = 0;
  for (int j = 1; j < n; ++j)
    if (delta[T - 1][static_cast<std::size_t>(j)] > delta[T - 1][static_cast<std::size_t>(last)]) last = j;
  r.log_prob = delta[T - 1][static_cast<std::size_t>(last)];
  r.path.assign(T, 0);
  r.path[T - 1] = last;
  for (std::size_t t = T - 1; t > 0; --t) r.path[t - 1] = psi[t][static_cast<std::size_t>(r.path[t])];
  return r;
}

inline ViterbiResult viterbi(const HmmModel& m, const ObservationSequence& obs) {
  if (obs.m != m.m_symbols)
    throw InvalidArgument("observation alphabet " + std::to_string(obs.m) + " != model m_symbols " +
                          std::to_string(m.m_symbols));
  return viterbi(m, obs.symbols);
}

struct BaumWelchResult {
  HmmModel model;
  std::vector<double> ll_trace;  // total log-likelihood per iteration (index 0 = initial model)
  int iterations = 0;            // number of parameter updates applied
};

namespace detail {

// Per-sequence E-step sufficient statistics.
struct EStats {
  double ll = 0.0;
  std::vector<double> pi_num;              // gamma at t=0
  std::vector<std::vector<double>> a_num;  // sum_t xi
  std::vector<double> a_den;               // sum_{t<T-1} gamma
  std::vector<std::vector<double>> b_num;  // per-symbol gamma mass
  std::vector<double> b_den;               // sum_t gamma
};

inline EStats estep_one(const HmmModel& m, const std::vector<int>& obs) {
  const int n = m.n_states;
  const std::size_t T = obs.size();
  EStats st;
  st.pi_num.assign(static_cast<std::size_t>(n), 0.0);
  st.a_num.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
  st.a_den.assign(static_cast<std::size_t>(n), 0.0);
  st.b_num.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(m.m_symbols), 0.0));
  st.b_den.assign(static_cast<std::size_t>(n), 0.0);

  const ForwardResult f = forward(m, obs);
  st.ll = f.log_likelihood;
  if (!std::isfinite(st.ll))
    throw InvalidArgument("baum_welch: model assigns zero probability to a training sequence");

  // beta_tilde[t][i]: backward recursion divided by the forward step masses,
  // so gamma = alpha_hat * beta_tilde needs no extra normalization.
  std::vector<std::vector<double>> beta(T, std::vector<double>(static_cast<std::size_t>(n), 0.0));
  for (int i = 0; i < n; ++i) beta[T - 1][static_cast<std::size_t>(i)] = 1.0;
  for (std::size_t t = T - 1; t > 0; --t) {
    const auto o = static_cast<std::size_t>(obs[t]);
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j)
        acc += m.a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * m.b[static_cast<std::size_t>(j)][o] *
               beta[t][static_cast<std::size_t>(j)];
      beta[t - 1][static_cast<std::size_t>(i)] = acc / f.scale[t];
    }
  }

  for (std::size_t t = 0; t < T; ++t) {
    const auto o = static_cast<std::size_t>(obs[t]);
    for (int i = 0; i < n; ++i) {
      const double g = f.alpha[t][static_cast<std::size_t>(i)] * beta[t][static_cast<std::size_t>(i)];
      if (t == 0) st.pi_num[static_cast<std::size_t>(i)] += g;
      st.b_num[static_cast<std::size_t>(i)][o] += g;
      st.b_den[static_cast<std::size_t>(i)] += g;
      if (t + 1 < T) st.a_den[static_cast<std::size_t>(i)] += g;
    }
    if (t + 1 < T) {
      const auto o1 = static_cast<std::size_t>(obs[t + 1]);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          const double xi = f.alpha[t][static_cast<std::size_t>(i)] * m.a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
                            m.b[static_cast<std::size_t>(j)][o1] * beta[t + 1][static_cast<std::size_t>(j)] / f.scale[t + 1];
          st.a_num[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] += xi;
        }
      }
    }
  }
  return st;
}

// Floor-and-renormalize: lift every entry to at least `floor`, then rescale
// the row back onto the simplex. An all-zero row becomes uniform.
inline void floor_row(std::vector<double>& row, double floor) {
  for (double& v : row) v = std::max(v, floor);
  double s = 0.0;
  for (double v : row) s += v;
  for (double& v : row) v /= s;
}

}  // namespace detail

// Multi-sequence Baum-Welch with per-step scaling. The E-step fans out across
// sequences (block_size observations per task chunk); the M-step reduces the
// per-sequence statistics in sequence order, so worker count and block size
// never change the numbers.
inline BaumWelchResult baum_welch(const HmmModel& init, const std::vector<std::vector<int>>& sequences,
                                  const HmmConfig& cfg, const Backend& backend = Backend::sequential()) {
  cfg.validate();
  init.validate();
  if (sequences.empty()) throw InvalidArgument("baum_welch needs >= 1 sequence");
  for (const auto& s : sequences) detail::check_obs(init, s);
  for (int i = 0; i < init.n_states; ++i) {
    double row_max = 0.0;
    for (double v : init.a[static_cast<std::size_t>(i)]) row_max = std::max(row_max, v);
    for (double v : init.b[static_cast<std::size_t>(i)]) row_max = std::max(row_max, v);
    if (row_max <= 0.0) throw InvalidArgument("baum_welch: degenerate initial model (zero row at state " + std::to_string(i) + ")");
  }

  BaumWelchResult out;
  out.model = init;
  const int n = init.n_states;
  const int M = init.m_symbols;

  double prev_ll = 0.0;
  for (int it = 0; it <= cfg.max_iters; ++it) {
    const auto stats = parallel_map(
        sequences, [&](const std::vector<int>& s) { return detail::estep_one(out.model, s); }, backend,
        static_cast<std::size_t>(cfg.block_size));

    double ll = 0.0;
    for (const auto& st : stats) ll += st.ll;
    out.ll_trace.push_back(ll);

    if (it == cfg.max_iters) break;
    if (it > 0 && ll - prev_ll < cfg.ll_tol * std::max(1.0, std::abs(prev_ll))) break;
    prev_ll = ll;

    HmmModel next = out.model;
    for (int i = 0; i < n; ++i) {
      double pi_num = 0.0;
      for (const auto& st : stats) pi_num += st.pi_num[static_cast<std::size_t>(i)];
      next.pi[static_cast<std::size_t>(i)] = pi_num / static_cast<double>(sequences.size());

      double a_den = 0.0, b_den = 0.0;
      for (const auto& st : stats) a_den += st.a_den[static_cast<std::size_t>(i)];
      for (const auto& st : stats) b_den += st.b_den[static_cast<std::size_t>(i)];
      for (int j = 0; j < n; ++j) {
        double num = 0.0;
        for (const auto& st : stats) num += st.a_num[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        next.a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = a_den > 0.0 ? num / a_den : 0.0;
      }
      for (int k = 0; k < M; ++k) {
        double num = 0.0;
        for (const auto& st : stats) num += st.b_num[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        next.b[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = b_den > 0.0 ? num / b_den : 0.0;
      }
    }
    detail::floor_row(next.pi, cfg.floor);
    for (int i = 0; i < n; ++i) {
      detail::floor_row(next.a[static_cast<std::size_t>(i)], cfg.floor);
      detail::floor_row(next.b[static_cast<std::size_t>(i)], cfg.floor);
    }
    out.model = next;
    out.iterations = it + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Action bank: one model per action, shared alphabet.
// ---------------------------------------------------------------------------

struct ActionBank {
  std::vector<HmmModel> models;

  void validate() const {
    if (models.empty()) throw InvalidArgument("action bank is empty");
    for (const auto& m : models) {
      m.validate();
      if (m.action_name.empty()) throw InvalidArgument("action bank model without a name");
      if (m.m_symbols != models[0].m_symbols) throw InvalidArgument("action bank models disagree on alphabet size");
    }
    for (std::size_t i = 0; i < models.size(); ++i)
      for (std::size_t j = i + 1; j < models.size(); ++j)
        if (models[i].action_name == models[j].action_name)
          throw InvalidArgument("duplicate action name '" + models[i].action_name + "' in bank");
  }
};

struct Recognition {
  std::string action;
  std::vector<std::pair<std::string, double>> log_likelihoods;  // bank order
};

// Max-likelihood recognition; each model scores on its own worker. Ties go to
// the lexicographically smallest action name.
inline Recognition recognize(const ActionBank& bank, const std::vector<int>& obs,
                             const Backend& backend = Backend::sequential()) {
  bank.validate();
  const auto lls = parallel_map(
      bank.models, [&](const HmmModel& m) { return forward(m, obs).log_likelihood; }, backend, 1);
  Recognition r;
  for (std::size_t i = 0; i < bank.models.size(); ++i) r.log_likelihoods.emplace_back(bank.models[i].action_name, lls[i]);
  std::size_t best = 0;
  for (std::size_t i = 1; i < lls.size(); ++i) {
    if (lls[i] > lls[best] || (lls[i] == lls[best] && bank.models[i].action_name < bank.models[best].action_name))
      best = i;
  }
  r.action = bank.models[best].action_name;
  return r;
}

inline Recognition recognize(const ActionBank& bank, const ObservationSequence& obs,
                             const Backend& backend = Backend::sequential()) {
  if (!bank.models.empty() && obs.m != bank.models[0].m_symbols)
    throw InvalidArgument("observation alphabet does not match bank");
  return recognize(bank, obs.symbols, backend);
}

// ---------------------------------------------------------------------------
// Serialization: `hmm v1` text; a bank is a directory of *.hmm files.
// ---------------------------------------------------------------------------

inline std::string format_hmm(const HmmModel& m) {
  using detail::fmt_g17;
  std::string out = "hmm v1\n";
  out += "action " + (m.action_name.empty() ? std::string("-") : m.action_name) + "\n";
  out += "n_states " + std::to_string(m.n_states) + "\n";
  out += "m_symbols " + std::to_string(m.m_symbols) + "\n";
  out += "pi";
  for (double v : m.pi) out += " " + fmt_g17(v);
  out += "\na\n";
  for (const auto& row : m.a) {
    for (std::size_t j = 0; j < row.size(); ++j) out += (j ? " " : "") + fmt_g17(row[j]);
    out += "\n";
  }
  out += "b\n";
  for (const auto& row : m.b) {
    for (std::size_t j = 0; j < row.size(); ++j) out += (j ? " " : "") + fmt_g17(row[j]);
    out += "\n";
  }
  return out;
}

inline HmmModel parse_hmm(const std::string& text, const std::string& source = "<memory>") {
  using detail::expect_token;
  using detail::read_value;
  std::istringstream in(text);
  expect_token(in, "hmm", source);
  expect_token(in, "v1", source);
  HmmModel m;
  expect_token(in, "action", source);
  m.action_name = read_value<std::string>(in, "action name", source);
  if (m.action_name == "-") m.action_name.clear();
  expect_token(in, "n_states", source);
  m.n_states = read_value<int>(in, "n_states", source);
  expect_token(in, "m_symbols", source);
  m.m_symbols = read_value<int>(in, "m_symbols", source);
  if (m.n_states < 1 || m.m_symbols < 1) throw IoError("bad hmm dimensions in " + source);
  expect_token(in, "pi", source);
  m.pi.resize(static_cast<std::size_t>(m.n_states));
  for (auto& v : m.pi) v = read_value<double>(in, "pi entry", source);
  expect_token(in, "a", source);
  m.a.assign(static_cast<std::size_t>(m.n_states), std::vector<double>(static_cast<std::size_t>(m.n_states)));
  for (auto& row : m.a)
    for (auto& v : row) v = read_value<double>(in, "a entry", source);
  expect_token(in, "b", source);
  m.b.assign(static_cast<std::size_t>(m.n_states), std::vector<double>(static_cast<std::size_t>(m.m_symbols)));
  for (auto& row : m.b)
    for (auto& v : row) v = read_value<double>(in, "b entry", source);
  m.validate(1e-6);  // serialized rows were stochastic; allow print round-off
  return m;
}

inline void save_hmm(const HmmModel& m, const std::filesystem::path& path) { detail::spit(path, format_hmm(m)); }

inline HmmModel load_hmm(const std::filesystem::path& path) { return parse_hmm(detail::slurp(path), path.string()); }

inline void save_bank(const ActionBank& bank, const std::filesystem::path& dir) {
  bank.validate();
  std::filesystem::create_directories(dir);
  for (const auto& m : bank.models) save_hmm(m, dir / (m.action_name + ".hmm"));
}

inline ActionBank load_bank(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("bank directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".hmm") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  ActionBank bank;
  for (const auto& f : files) bank.models.push_back(load_hmm(f));
  bank.validate();
  return bank;
}

}  // namespace teamrec
