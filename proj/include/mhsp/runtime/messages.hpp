#pragma once

#include <string>
#include <vector>

#include "mhsp/common/json_io.hpp"

namespace mhsp::runtime {

struct EvalItem {
  int subproblem = 0;
  std::vector<double> x;
  std::vector<double> coefficients;
};

struct EvalRequest {
  int iteration = 0;
  std::vector<EvalItem> items;
};

struct EvalOutcome {
  int subproblem = 0;
  double theta = 0.0;
  std::vector<double> lambda;
  std::string status = "optimal";
  double solve_seconds = 0.0;
};

struct EvalResult {
  int iteration = 0;
  // Ascending subproblem id.
  std::vector<EvalOutcome> outcomes;
};

Json request_to_json(const EvalRequest& request);
EvalRequest request_from_json(const Json& value);

// Timing fields are omitted when `with_timing` is false; that form is the
// canonical payload used for cross-mode comparison.
Json result_to_json(const EvalResult& result, bool with_timing = true);
EvalResult result_from_json(const Json& value);
std::string canonical_payload(const EvalResult& result);

}  // namespace mhsp::runtime
