#include "mhsp/runtime/evaluator.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "mhsp/common/error.hpp"
#include "mhsp/model/evaluate.hpp"
#include "mhsp/model/serialize.hpp"

namespace mhsp::runtime {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

}  // namespace

SubproblemStore::SubproblemStore(std::vector<model::OperationalSubproblem> subproblems,
                                 EvaluatorOptions options)
    : subproblems_(std::move(subproblems)), bases_(subproblems_.size()), options_(options) {
  for (std::size_t k = 0; k < subproblems_.size(); ++k) index_[subproblems_[k].id] = static_cast<int>(k);
}

void SubproblemStore::check(const EvalRequest& request) const {
  std::set<int> seen;
  for (const EvalItem& item : request.items) {
    if (!contains(item.subproblem)) {
      throw ValidationError("unknown subproblem id " + std::to_string(item.subproblem));
    }
    if (!seen.insert(item.subproblem).second) {
      throw ValidationError("subproblem id " + std::to_string(item.subproblem) + " requested twice");
    }
  }
}

std::vector<EvalOutcome> SubproblemStore::evaluate(const std::vector<EvalItem>& items, int threads,
                                                   double* busy_seconds) {
  std::vector<EvalOutcome> outcomes(items.size());
  std::vector<std::exception_ptr> errors(items.size());
  std::atomic<std::size_t> next{0};
  std::vector<double> busy(std::max(threads, 1), 0.0);

  auto work = [&](int t) {
    Clock::time_point first{};
    Clock::time_point last{};
    bool started = false;
    for (std::size_t k = next++; k < items.size(); k = next++) {
      const Clock::time_point start = Clock::now();
      if (!started) first = start;
      started = true;
      const EvalItem& item = items[k];
      const int slot = index_.at(item.subproblem);
      try {
        const model::OperationalSubproblem& sp = subproblems_[slot];
        lp::BasisState* basis = nullptr;
        if (options_.warm_start && !bases_[slot].columns.empty()) basis = &bases_[slot];
        lp::BasisState fresh;
        model::SubproblemValue value = model::evaluate_subproblem(
            sp, item.x, item.coefficients, lp::default_solver(), basis ? basis : &fresh);
        if (options_.warm_start && !basis) bases_[slot] = std::move(fresh);
        outcomes[k].subproblem = item.subproblem;
        outcomes[k].theta = value.theta;
        outcomes[k].lambda = std::move(value.lambda);
        outcomes[k].status = "optimal";
      } catch (...) {
        errors[k] = std::current_exception();
      }
      if (options_.min_solve_seconds > 0.0) {
        const auto until = start + std::chrono::duration_cast<Clock::duration>(
                                       std::chrono::duration<double>(options_.min_solve_seconds));
        std::this_thread::sleep_until(until);
      }
      last = Clock::now();
      outcomes[k].solve_seconds = seconds_between(start, last);
    }
    if (started) busy[t] = seconds_between(first, last);
  };

  if (threads <= 1 || items.size() <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    const int n = std::min<int>(threads, static_cast<int>(items.size()));
    for (int t = 0; t < n; ++t) pool.emplace_back(work, t);
    for (std::thread& th : pool) th.join();
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  if (busy_seconds) *busy_seconds = *std::max_element(busy.begin(), busy.end());
  return outcomes;
}

LocalEvaluator::LocalEvaluator(const model::MhspInstance& instance, int threads,
                               EvaluatorOptions options)
    : store_(instance.subproblems, options), threads_(std::max(1, threads)) {}

EvalResult LocalEvaluator::evaluate_round(const EvalRequest& request) {
  const Clock::time_point start = Clock::now();
  store_.check(request);
  std::vector<EvalItem> items = request.items;
  std::sort(items.begin(), items.end(),
            [](const EvalItem& a, const EvalItem& b) { return a.subproblem < b.subproblem; });
  double busy = 0.0;
  EvalResult result;
  result.iteration = request.iteration;
  result.outcomes = store_.evaluate(items, threads_, &busy);
  const double wall = seconds_between(start, Clock::now());
  timings_.push_back({request.iteration, wall, busy, std::max(0.0, wall - busy)});
  return result;
}

DistributedEvaluator::DistributedEvaluator(const model::MhspInstance& instance,
                                           const std::vector<std::string>& endpoints,
                                           int cores_per_worker, EvaluatorOptions options) {
  if (endpoints.empty()) throw ConfigError("distributed mode needs at least one worker endpoint");
  const int n_subs = static_cast<int>(instance.subproblems.size());
  assignment_ = assign_subproblems(std::max(n_subs, 1), static_cast<int>(endpoints.size()),
                                   cores_per_worker, Mode::kDistributed);
  for (const std::string& ep : endpoints) connections_.push_back(connect_to(parse_endpoint(ep)));
  for (std::size_t w = 0; w < connections_.size(); ++w) {
    const Json hello = exchange(static_cast<int>(w), Json{{"type", "hello"}, {"version", 1}, {"role", "master"}});
    if (hello.value("type", "") != "hello") throw TransportError("worker did not answer hello");
    Json subs = Json::array();
    for (int id : assignment_.subproblems[w]) {
      if (id < n_subs) subs.push_back(model::subproblem_to_json(instance.subproblems[id]));
    }
    const Json reply = exchange(static_cast<int>(w),
                                Json{{"type", "assign"},
                                     {"subproblems", subs},
                                     {"cores", cores_per_worker},
                                     {"warm_start", options.warm_start},
                                     {"min_solve_seconds", options.min_solve_seconds}});
    if (reply.value("type", "") != "assigned") throw TransportError("worker rejected the assignment");
  }
}

DistributedEvaluator::~DistributedEvaluator() = default;

Json DistributedEvaluator::exchange(int worker, const Json& message) {
  Connection& conn = connections_[worker];
  if (!conn.valid()) throw TransportError("connection to worker " + std::to_string(worker) + " is closed");
  try {
    conn.send_frame(message.dump());
    const std::string payload = conn.receive_frame();
    Json reply = Json::parse(payload);
    if (reply.value("type", "") == "error") {
      throw TransportError("worker " + std::to_string(worker) + ": " + reply.value("message", ""));
    }
    return reply;
  } catch (const Json::parse_error& e) {
    conn.close();
    throw TransportError("worker " + std::to_string(worker) + " sent malformed data");
  } catch (const TransportError&) {
    throw;
  }
}

EvalResult DistributedEvaluator::evaluate_round(const EvalRequest& request) {
  const Clock::time_point start = Clock::now();
  std::vector<EvalRequest> parts(connections_.size());
  for (const EvalItem& item : request.items) {
    const int w = assignment_.worker_of(item.subproblem);
    if (w < 0) throw ValidationError("subproblem " + std::to_string(item.subproblem) + " is not assigned");
    parts[w].items.push_back(item);
  }
  // Dispatch to every worker before collecting so they compute concurrently.
  std::vector<bool> sent(connections_.size(), false);
  for (std::size_t w = 0; w < connections_.size(); ++w) {
    if (parts[w].items.empty()) continue;
    parts[w].iteration = request.iteration;
    connections_[w].send_frame(request_to_json(parts[w]).dump());
    sent[w] = true;
  }
  EvalResult merged;
  merged.iteration = request.iteration;
  double busy = 0.0;
  std::string failure;
  for (std::size_t w = 0; w < connections_.size(); ++w) {
    if (!sent[w]) continue;
    try {
      const Json reply = Json::parse(connections_[w].receive_frame());
      if (reply.value("type", "") != "results") {
        failure = "worker " + std::to_string(w) + ": " + reply.value("message", "unexpected reply");
        continue;
      }
      EvalResult part = result_from_json(reply);
      if (part.iteration != request.iteration || part.outcomes.size() != parts[w].items.size()) {
        failure = "worker " + std::to_string(w) + " answered a different request";
        continue;
      }
      busy = std::max(busy, reply.value("busy_seconds", 0.0));
      for (EvalOutcome& o : part.outcomes) merged.outcomes.push_back(std::move(o));
    } catch (const std::exception& e) {
      failure = "worker " + std::to_string(w) + ": " + e.what();
      connections_[w].close();
    }
  }
  if (!failure.empty()) throw TransportError("round " + std::to_string(request.iteration) + " failed: " + failure);
  std::sort(merged.outcomes.begin(), merged.outcomes.end(),
            [](const EvalOutcome& a, const EvalOutcome& b) { return a.subproblem < b.subproblem; });
  const double wall = seconds_between(start, Clock::now());
  timings_.push_back({request.iteration, wall, busy, std::max(0.0, wall - busy)});
  return merged;
}

void DistributedEvaluator::shutdown_workers() {
  for (Connection& conn : connections_) {
    if (!conn.valid()) continue;
    try {
      conn.send_frame(Json{{"type", "shutdown"}}.dump());
      conn.receive_frame();
    } catch (const TransportError&) {
    }
    conn.close();
  }
}

namespace {

Json error_message(const std::string& message) { return Json{{"type", "error"}, {"message", message}}; }

// Returns false when the worker should stop serving.
bool serve_connection(Connection& conn, const WorkerOptions& options) {
  SubproblemStore store;
  int threads = 1;
  for (;;) {
    std::string payload;
    try {
      payload = conn.receive_frame(options.max_frame_bytes);
    } catch (const TransportError& e) {
      const std::string what = e.what();
      if (what.find("exceeds the limit") != std::string::npos) {
        try {
          conn.send_frame(error_message(what).dump());
        } catch (const TransportError&) {
        }
      }
      return true;
    }
    Json message;
    try {
      message = Json::parse(payload);
      if (!message.is_object() || !message.contains("type")) throw ParseError("message without a type");
    } catch (const std::exception& e) {
      try {
        conn.send_frame(error_message(std::string("malformed frame: ") + e.what()).dump());
      } catch (const TransportError&) {
      }
      return true;
    }
    const std::string type = message.value("type", "");
    try {
      if (type == "hello") {
        conn.send_frame(Json{{"type", "hello"}, {"version", 1}, {"role", "worker"}}.dump());
      } else if (type == "assign") {
        std::vector<model::OperationalSubproblem> subs;
        for (const Json& s : require(message, "subproblems")) subs.push_back(model::subproblem_from_json(s));
        EvaluatorOptions eo;
        eo.warm_start = message.value("warm_start", true);
        eo.min_solve_seconds = message.value("min_solve_seconds", 0.0);
        threads = std::max(1, message.value("cores", 1));
        Json ids = Json::array();
        for (const auto& s : subs) ids.push_back(s.id);
        store = SubproblemStore(std::move(subs), eo);
        conn.send_frame(Json{{"type", "assigned"}, {"ids", ids}}.dump());
      } else if (type == "evaluate") {
        const EvalRequest request = request_from_json(message);
        store.check(request);
        double busy = 0.0;
        EvalResult result;
        result.iteration = request.iteration;
        result.outcomes = store.evaluate(request.items, threads, &busy);
        Json reply = result_to_json(result);
        reply["busy_seconds"] = busy;
        conn.send_frame(reply.dump());
      } else if (type == "shutdown") {
        conn.send_frame(Json{{"type", "bye"}}.dump());
        return false;
      } else {
        conn.send_frame(error_message("unknown message type '" + type + "'").dump());
      }
    } catch (const TransportError&) {
      return true;
    } catch (const std::exception& e) {
      conn.send_frame(error_message(e.what()).dump());
    }
  }
}

}  // namespace

void serve_worker(const std::string& endpoint, const WorkerOptions& options,
                  const std::function<void(int)>& on_listening) {
  Listener listener(parse_endpoint(endpoint));
  if (on_listening) on_listening(listener.port());
  for (;;) {
    Connection conn = listener.accept();
    if (!serve_connection(conn, options)) return;
  }
}

}  // namespace mhsp::runtime
