#include "mhsp/runtime/assignment.hpp"

#include <string>

#include "mhsp/common/error.hpp"

namespace mhsp::runtime {

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::kSerial:
      return "serial";
    case Mode::kInProcess:
      return "inprocess";
    case Mode::kDistributed:
      return "distributed";
  }
  return "unknown";
}

Mode mode_from_string(const std::string& text) {
  if (text == "serial") return Mode::kSerial;
  if (text == "inprocess") return Mode::kInProcess;
  if (text == "distributed") return Mode::kDistributed;
  throw ConfigError("unknown mode '" + text + "' (expected serial, inprocess or distributed)");
}

int WorkerAssignment::worker_of(int subproblem) const {
  for (std::size_t w = 0; w < subproblems.size(); ++w) {
    for (int id : subproblems[w]) {
      if (id == subproblem) return static_cast<int>(w);
    }
  }
  return -1;
}

WorkerAssignment assign_subproblems(int n_subs, int n_workers, int cores_per_worker, Mode mode) {
  if (n_subs < 1) throw ValidationError("need at least one subproblem");
  if (n_workers < 1) throw ValidationError("need at least one worker");
  if (cores_per_worker < 1) throw ValidationError("need at least one core per worker");
  WorkerAssignment out;
  out.mode = mode;
  out.subproblems.resize(n_workers);
  out.cores.resize(n_workers);
  for (int id = 0; id < n_subs; ++id) out.subproblems[id % n_workers].push_back(id);
  for (int w = 0; w < n_workers; ++w) {
    const int assigned = static_cast<int>(out.subproblems[w].size());
    if (assigned == 0) continue;
    const int base = cores_per_worker / assigned;
    const int extra = base == 0 ? 0 : cores_per_worker % assigned;
    for (int k = 0; k < assigned; ++k) {
      out.cores[w].push_back(std::max(1, base) + (k < extra ? 1 : 0));
    }
  }
  return out;
}

}  // namespace mhsp::runtime
