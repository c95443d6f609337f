#pragma once

#include <any>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <typeindex>
#include <utility>
#include <vector>

#include "teamrec/error.hpp"
#include "teamrec/parallel.hpp"
#include "teamrec/textio.hpp"

namespace teamrec {

enum class PipelineMode { Sequential, Pipelined };

inline std::string pipeline_mode_name(PipelineMode m) {
  return m == PipelineMode::Sequential ? "sequential" : "pipelined";
}

struct StageSpec {
  std::string name;
  std::function<std::any(std::any&&)> fn;
  std::type_index in_type = std::type_index(typeid(void));
  std::type_index out_type = std::type_index(typeid(void));
  Backend backend = Backend::sequential();  // metadata: the stage's data-parallel backend
  std::size_t queue_capacity = 4;
  bool enabled = true;
};

// Wraps a typed In -> Out callable as a type-erased stage.
template <typename In, typename Out, typename F>
StageSpec make_stage(std::string name, F f, Backend backend = Backend::sequential(), std::size_t queue_capacity = 4) {
  StageSpec s;
  s.name = std::move(name);
  s.in_type = std::type_index(typeid(In));
  s.out_type = std::type_index(typeid(Out));
  s.backend = backend;
  s.queue_capacity = queue_capacity;
  s.fn = [f = std::move(f)](std::any&& item) -> std::any { return std::any(f(std::any_cast<In&&>(std::move(item)))); };
  return s;
}

struct StageTiming {
  struct Stage {
    std::string name;
    std::size_t items = 0;
    double total_s = 0.0;
    double mean_ms() const { return items == 0 ? 0.0 : total_s * 1000.0 / static_cast<double>(items); }
  };
  struct Edge {
    std::string from, to;
    double wait_s = 0.0;  // time spent blocked on this queue (producer + consumer)
  };
  std::vector<Stage> stages;
  std::vector<Edge> edges;
};

// Text table for the bench harness: `stage items total_s mean_ms`.
inline std::string format_timing_report(const StageTiming& t) {
  std::string out = "stage items total_s mean_ms\n";
  char buf[160];
  for (const auto& s : t.stages) {
    std::snprintf(buf, sizeof(buf), "%s %zu %.6f %.6f\n", s.name.c_str(), s.items, s.total_s, s.mean_ms());
    out += buf;
  }
  for (const auto& e : t.edges) {
    std::snprintf(buf, sizeof(buf), "edge %s->%s wait_s %.6f\n", e.from.c_str(), e.to.c_str(), e.wait_s);
    out += buf;
  }
  return out;
}

namespace detail {

// Bounded FIFO with close/cancel. close(): no more pushes, consumers drain
// what's left; cancel(): everything unblocks immediately and drops its work.
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : cap_(capacity) {}

  bool push(std::any&& item) {
    std::unique_lock lk(mu_);
    not_full_.wait(lk, [&] { return items_.size() < cap_ || cancelled_; });
    if (cancelled_) return false;
    items_.push_back(std::move(item));
    lk.unlock();
    not_empty_.notify_one();
    return true;
  }

  std::optional<std::any> pop() {
    std::unique_lock lk(mu_);
    not_empty_.wait(lk, [&] { return !items_.empty() || closed_ || cancelled_; });
    if (cancelled_ || items_.empty()) return std::nullopt;
    std::any item = std::move(items_.front());
    items_.pop_front();
    lk.unlock();
    not_full_.notify_one();
    return item;
  }

  void close() {
    {
      std::lock_guard lk(mu_);
      closed_ = true;
    }
    not_empty_.notify_all();
  }

  void cancel() {
    {
      std::lock_guard lk(mu_);
      cancelled_ = true;
    }
    not_empty_.notify_all();
    not_full_.notify_all();
  }

 private:
  std::mutex mu_;
  std::condition_variable not_full_, not_empty_;
  std::deque<std::any> items_;
  std::size_t cap_;
  bool closed_ = false;
  bool cancelled_ = false;
};

}  // namespace detail

class Pipeline {
 public:
  // Validates names and the stage type chain up front, so a mis-assembled
  // pipeline fails before any item flows.
  static Pipeline assemble(std::vector<StageSpec> stages) {
    Pipeline p;
    for (auto& s : stages) {
      if (!s.enabled) continue;
      if (s.name.empty()) throw PipelineError("stage without a name");
      if (s.queue_capacity < 1) throw PipelineError("stage '" + s.name + "': queue capacity must be >= 1");
      for (const auto& prev : p.stages_)
        if (prev.name == s.name) throw PipelineError("duplicate stage name '" + s.name + "'");
      if (!p.stages_.empty() && p.stages_.back().out_type != s.in_type)
        throw PipelineError("type chain mismatch: stage '" + p.stages_.back().name + "' feeds '" + s.name + "'");
      p.stages_.push_back(std::move(s));
    }
    if (p.stages_.empty()) throw PipelineError("pipeline has no enabled stages");
    return p;
  }

  const std::vector<StageSpec>& stages() const { return stages_; }
  std::type_index input_type() const { return stages_.front().in_type; }
  std::type_index output_type() const { return stages_.back().out_type; }

  struct Result {
    std::vector<std::any> items;
    StageTiming timing;
  };

  Result run(std::vector<std::any> inputs, PipelineMode mode) const {
    for (std::size_t i = 0; i < inputs.size(); ++i)
      if (std::type_index(inputs[i].type()) != input_type())
        throw PipelineError("input item " + std::to_string(i) + " does not match stage '" + stages_.front().name + "'");
    return mode == PipelineMode::Sequential ? run_sequential(std::move(inputs)) : run_pipelined(std::move(inputs));
  }

 private:
  using Clock = std::chrono::steady_clock;

  struct StageFailure {
    std::size_t item = 0;
    std::size_t stage = 0;
    std::string message;
  };

  StageTiming blank_timing() const {
    StageTiming t;
    for (const auto& s : stages_) t.stages.push_back({s.name, 0, 0.0});
    for (std::size_t i = 0; i + 1 < stages_.size(); ++i) t.edges.push_back({stages_[i].name, stages_[i + 1].name, 0.0});
    return t;
  }

  [[noreturn]] void rethrow(const StageFailure& f) const {
    throw PipelineError("stage '" + stages_[f.stage].name + "' failed on item " + std::to_string(f.item) + ": " +
                        f.message);
  }

  Result run_sequential(std::vector<std::any> inputs) const {
    Result r;
    r.timing = blank_timing();
    r.items.reserve(inputs.size());
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      std::any item = std::move(inputs[k]);
      for (std::size_t s = 0; s < stages_.size(); ++s) {
        const auto t0 = Clock::now();
        try {
          item = stages_[s].fn(std::move(item));
        } catch (const std::exception& e) {
          rethrow({k, s, e.what()});
        }
        r.timing.stages[s].total_s += std::chrono::duration<double>(Clock::now() - t0).count();
        r.timing.stages[s].items += 1;
      }
      r.items.push_back(std::move(item));
    }
    return r;
  }

  Result run_pipelined(std::vector<std::any> inputs) const {
    const std::size_t n_stages = stages_.size();
    Result r;
    r.timing = blank_timing();
    r.items.reserve(inputs.size());

    // queue[i] feeds stage i; queue[n_stages] is the sink.
    std::vector<std::unique_ptr<detail::BoundedQueue>> queues;
    queues.push_back(std::make_unique<detail::BoundedQueue>(stages_[0].queue_capacity));
    for (std::size_t i = 1; i < n_stages; ++i) queues.push_back(std::make_unique<detail::BoundedQueue>(stages_[i].queue_capacity));
    queues.push_back(std::make_unique<detail::BoundedQueue>(stages_.back().queue_capacity));

    std::mutex fail_mu;
    std::optional<StageFailure> failure;
    auto report_failure = [&](StageFailure f) {
      {
        std::lock_guard lk(fail_mu);
        // keep the failure a sequential run would hit first
        if (!failure || f.item < failure->item || (f.item == failure->item && f.stage < failure->stage)) failure = std::move(f);
      }
      for (auto& q : queues) q->cancel();
    };

    std::vector<double> pop_wait(n_stages + 1, 0.0), push_wait(n_stages + 1, 0.0);

    std::vector<std::thread> threads;
    threads.reserve(n_stages + 1);

    // Source: its own thread, so the main thread is free to drain the sink
    // (a finite stream then runs without deadlock for any capacity >= 1).
    threads.emplace_back([&] {
      for (std::size_t k = 0; k < inputs.size(); ++k) {
        // item index rides along with the payload
        if (!queues[0]->push(std::make_any<std::pair<std::size_t, std::any>>(k, std::move(inputs[k])))) return;
      }
      queues[0]->close();
    });

    for (std::size_t s = 0; s < n_stages; ++s) {
      threads.emplace_back([&, s] {
        auto& in_q = *queues[s];
        auto& out_q = *queues[s + 1];
        for (;;) {
          const auto tp0 = Clock::now();
          auto item = in_q.pop();
          pop_wait[s] += std::chrono::duration<double>(Clock::now() - tp0).count();
          if (!item) break;
          auto [k, payload] = std::any_cast<std::pair<std::size_t, std::any>>(std::move(*item));
          const auto t0 = Clock::now();
          std::any out;
          try {
            out = stages_[s].fn(std::move(payload));
          } catch (const std::exception& e) {
            report_failure({k, s, e.what()});
            return;
          }
          r.timing.stages[s].total_s += std::chrono::duration<double>(Clock::now() - t0).count();
          r.timing.stages[s].items += 1;
          const auto tq0 = Clock::now();
          const bool ok = out_q.push(std::make_any<std::pair<std::size_t, std::any>>(k, std::move(out)));
          push_wait[s + 1] += std::chrono::duration<double>(Clock::now() - tq0).count();
          if (!ok) return;
        }
        out_q.close();
      });
    }

    // Drain the sink on this thread; FIFO queues keep item order intact.
    std::vector<std::pair<std::size_t, std::any>> collected;
    for (;;) {
      auto item = queues[n_stages]->pop();
      if (!item) break;
      collected.push_back(std::any_cast<std::pair<std::size_t, std::any>>(std::move(*item)));
    }
    for (auto& t : threads) t.join();

    {
      std::lock_guard lk(fail_mu);
      if (failure) rethrow(*failure);
    }
    for (std::size_t k = 0; k < collected.size(); ++k) {
      if (collected[k].first != k) throw PipelineError("pipeline item order violated");  // FIFO law broken
      r.items.push_back(std::move(collected[k].second));
    }
    if (r.items.size() != inputs.size()) throw PipelineError("pipeline dropped items");
    for (std::size_t i = 0; i + 1 < n_stages; ++i) r.timing.edges[i].wait_s = pop_wait[i + 1] + push_wait[i + 1];
    return r;
  }

  std::vector<StageSpec> stages_;
};

// Typed front door: vector<In> through the pipeline, vector<Out> back.
template <typename In, typename Out>
std::pair<std::vector<Out>, StageTiming> run_pipeline(const Pipeline& p, std::vector<In> inputs, PipelineMode mode) {
  if (p.input_type() != std::type_index(typeid(In)))
    throw PipelineError("pipeline input type does not match the provided items");
  if (p.output_type() != std::type_index(typeid(Out))) throw PipelineError("pipeline output type does not match request");
  std::vector<std::any> erased;
  erased.reserve(inputs.size());
  for (auto& item : inputs) erased.emplace_back(std::move(item));
  auto result = p.run(std::move(erased), mode);
  std::vector<Out> out;
  out.reserve(result.items.size());
  for (auto& item : result.items) out.push_back(std::any_cast<Out>(std::move(item)));
  return {std::move(out), std::move(result.timing)};
}

// Speedup figure of merit, reported at 2-decimal precision.
inline double speedup_report(double t_baseline, double t_parallel) {
  if (!(t_baseline > 0.0) || !(t_parallel > 0.0)) throw InvalidArgument("speedup_report needs positive times");
  return std::round(t_baseline / t_parallel * 100.0) / 100.0;
}

}  // namespace teamrec
