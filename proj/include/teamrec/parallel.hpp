#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "teamrec/error.hpp"

namespace teamrec {

// Compute backend for a stage or an operation. Sequential runs everything on
// the calling thread; Parallel fans work out to a fixed number of workers.
// Results must never depend on the choice: callers are required to keep
// per-item work self-contained and reductions in a fixed order.
struct Backend {
  enum class Kind { Sequential, Parallel };

  Kind kind = Kind::Sequential;
  int workers = 1;

  static Backend sequential() { return Backend{}; }

  static Backend parallel(int workers) {
    if (workers < 1) throw InvalidArgument("backend workers must be >= 1, got " + std::to_string(workers));
    return Backend{Kind::Parallel, workers};
  }

  int effective_workers() const { return kind == Kind::Sequential ? 1 : workers; }

  std::string to_string() const {
    return kind == Kind::Sequential ? "sequential" : "parallel:" + std::to_string(workers);
  }
};

// Parses "sequential" or "parallel:N".
inline Backend parse_backend(const std::string& s) {
  if (s == "sequential") return Backend::sequential();
  if (s.rfind("parallel:", 0) == 0) {
    const std::string n = s.substr(9);
    try {
      return Backend::parallel(std::stoi(n));
    } catch (const std::exception&) {
      throw ConfigError("bad worker count in backend spec '" + s + "'");
    }
  }
  if (s == "parallel") return Backend::parallel(static_cast<int>(std::thread::hardware_concurrency() > 0 ? std::thread::hardware_concurrency() : 1));
  throw ConfigError("unknown backend '" + s + "' (expected sequential or parallel:N)");
}

namespace detail {

// Runs body(index) over [0, n) on the backend's workers. Indices are handed
// out through an atomic counter in chunks; each index is processed exactly
// once. The first exception by smallest index wins.
template <typename Body>
void run_indexed(std::size_t n, const Backend& backend, std::size_t chunk, Body&& body) {
  if (n == 0) return;
  const int workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(backend.effective_workers()), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  if (chunk == 0) chunk = 1;
  std::atomic<std::size_t> next{0};
  std::vector<std::pair<std::size_t, std::exception_ptr>> errors(static_cast<std::size_t>(workers), {n, nullptr});
  auto worker = [&](int wid) {
    for (;;) {
      const std::size_t begin = next.fetch_add(chunk);
      if (begin >= n) return;
      const std::size_t end = std::min(n, begin + chunk);
      for (std::size_t i = begin; i < end; ++i) {
        try {
          body(i);
        } catch (...) {
          auto& slot = errors[static_cast<std::size_t>(wid)];
          if (i < slot.first) slot = {i, std::current_exception()};
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers) - 1);
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker, w);
  worker(0);
  for (auto& t : pool) t.join();
  std::size_t best = n;
  std::exception_ptr first;
  for (const auto& [idx, err] : errors) {
    if (err && idx < best) {
      best = idx;
      first = err;
    }
  }
  if (first) std::rethrow_exception(first);
}

}  // namespace detail

// Applies a pure function to every item, preserving order. The output is
// identical for every worker count; the first error in input order is the one
// propagated.
template <typename T, typename F>
auto parallel_map(const std::vector<T>& items, F&& f, const Backend& backend = Backend::sequential(),
                  std::size_t chunk = 1) -> std::vector<decltype(f(items.front()))> {
  using R = decltype(f(items.front()));
  std::vector<std::optional<R>> slots(items.size());
  detail::run_indexed(items.size(), backend, chunk, [&](std::size_t i) { slots[i].emplace(f(items[i])); });
  std::vector<R> out;
  out.reserve(items.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// Data-parallel index loop; body(i) must only touch state private to index i.
template <typename F>
void parallel_for(std::size_t n, F&& body, const Backend& backend = Backend::sequential(), std::size_t chunk = 64) {
  detail::run_indexed(n, backend, chunk, std::forward<F>(body));
}

}  // namespace teamrec
