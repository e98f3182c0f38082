#pragma once

#include <string>
#include <vector>

namespace mhsp::runtime {

enum class Mode { kSerial, kInProcess, kDistributed };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& text);

struct WorkerAssignment {
  Mode mode = Mode::kSerial;
  // Subproblem ids per worker, ascending.
  std::vector<std::vector<int>> subproblems;
  // Core budget per assigned subproblem, aligned with `subproblems`.
  std::vector<std::vector<int>> cores;

  int worker_of(int subproblem) const;
};

// Round-robin by ascending id. Each worker splits its cores evenly over its
// subproblems (at least one each), remainder going to the lowest ids.
WorkerAssignment assign_subproblems(int n_subs, int n_workers, int cores_per_worker,
                                    Mode mode = Mode::kSerial);

}  // namespace mhsp::runtime
