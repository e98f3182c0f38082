#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mhsp/lp/simplex.hpp"
#include "mhsp/model/instance.hpp"
#include "mhsp/runtime/assignment.hpp"
#include "mhsp/runtime/messages.hpp"
#include "mhsp/runtime/socket.hpp"

namespace mhsp::runtime {

struct EvaluatorOptions {
  // Each evaluation is padded with a wall-clock wait up to this duration.
  double min_solve_seconds = 0.0;
  // Reuse each subproblem's last optimal basis as the next warm start.
  bool warm_start = true;
};

struct RoundTiming {
  int iteration = 0;
  double wall_seconds = 0.0;
  // Longest per-worker busy span within the round.
  double solving_seconds = 0.0;
  double overhead_seconds = 0.0;
};

// Synchronous evaluation of one Benders round. Results come back in
// ascending subproblem order; any failure aborts the whole round.
class RoundEvaluator {
 public:
  virtual ~RoundEvaluator() = default;
  virtual EvalResult evaluate_round(const EvalRequest& request) = 0;
  virtual Mode mode() const = 0;
  const std::vector<RoundTiming>& timings() const { return timings_; }

 protected:
  std::vector<RoundTiming> timings_;
};

// Evaluation state of a set of subproblems: the data plus the warm-start
// basis of each. Shared by the in-process evaluator and the worker.
class SubproblemStore {
 public:
  SubproblemStore() = default;
  explicit SubproblemStore(std::vector<model::OperationalSubproblem> subproblems,
                           EvaluatorOptions options = {});

  bool contains(int id) const { return index_.count(id) > 0; }
  // Throws ValidationError naming unknown or duplicate ids.
  void check(const EvalRequest& request) const;
  // Evaluates items in parallel on `threads` threads; returns outcomes in
  // item order and the busy span of the busiest thread.
  std::vector<EvalOutcome> evaluate(const std::vector<EvalItem>& items, int threads,
                                    double* busy_seconds);

 private:
  std::vector<model::OperationalSubproblem> subproblems_;
  std::vector<lp::BasisState> bases_;
  std::map<int, int> index_;
  EvaluatorOptions options_;
};

class LocalEvaluator final : public RoundEvaluator {
 public:
  // threads == 1 gives serial mode, more gives in-process parallel mode.
  LocalEvaluator(const model::MhspInstance& instance, int threads, EvaluatorOptions options = {});
  EvalResult evaluate_round(const EvalRequest& request) override;
  Mode mode() const override { return threads_ > 1 ? Mode::kInProcess : Mode::kSerial; }

 private:
  SubproblemStore store_;
  int threads_;
};

class DistributedEvaluator final : public RoundEvaluator {
 public:
  DistributedEvaluator(const model::MhspInstance& instance, const std::vector<std::string>& endpoints,
                       int cores_per_worker, EvaluatorOptions options = {});
  ~DistributedEvaluator() override;
  EvalResult evaluate_round(const EvalRequest& request) override;
  Mode mode() const override { return Mode::kDistributed; }
  const WorkerAssignment& assignment() const { return assignment_; }
  // Sends Shutdown to every worker.
  void shutdown_workers();

 private:
  Json exchange(int worker, const Json& message);
  WorkerAssignment assignment_;
  std::vector<Connection> connections_;
};

struct WorkerOptions {
  std::size_t max_frame_bytes = kDefaultMaxFrameBytes;
};

// Serves the worker side of the protocol until a Shutdown message arrives.
// `on_listening` receives the bound port (useful with port 0).
void serve_worker(const std::string& endpoint, const WorkerOptions& options = {},
                  const std::function<void(int)>& on_listening = {});

}  // namespace mhsp::runtime
