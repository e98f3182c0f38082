#include "mhsp/runtime/messages.hpp"

#include "mhsp/common/error.hpp"

namespace mhsp::runtime {

Json request_to_json(const EvalRequest& request) {
  Json items = Json::array();
  for (const EvalItem& item : request.items) {
    items.push_back(Json{{"id", item.subproblem},
                         {"x", numbers_to_json(item.x)},
                         {"coefficients", numbers_to_json(item.coefficients)}});
  }
  return Json{{"type", "evaluate"}, {"iteration", request.iteration}, {"items", items}};
}

EvalRequest request_from_json(const Json& value) {
  EvalRequest request;
  try {
    request.iteration = require(value, "iteration").get<int>();
    for (const Json& item : require(value, "items")) {
      request.items.push_back({require(item, "id").get<int>(), numbers_from_json(require(item, "x")),
                               numbers_from_json(require(item, "coefficients"))});
    }
  } catch (const Json::exception& e) {
    throw ParseError(std::string("evaluate message: ") + e.what());
  }
  return request;
}

Json result_to_json(const EvalResult& result, bool with_timing) {
  Json outcomes = Json::array();
  for (const EvalOutcome& o : result.outcomes) {
    Json entry{{"id", o.subproblem},
               {"theta", number_to_json(o.theta)},
               {"lambda", numbers_to_json(o.lambda)},
               {"status", o.status}};
    if (with_timing) entry["solve_seconds"] = o.solve_seconds;
    outcomes.push_back(std::move(entry));
  }
  return Json{{"type", "results"}, {"iteration", result.iteration}, {"results", outcomes}};
}

EvalResult result_from_json(const Json& value) {
  EvalResult result;
  try {
    result.iteration = require(value, "iteration").get<int>();
    for (const Json& entry : require(value, "results")) {
      EvalOutcome o;
      o.subproblem = require(entry, "id").get<int>();
      o.theta = number_from_json(require(entry, "theta"));
      o.lambda = numbers_from_json(require(entry, "lambda"));
      o.status = require(entry, "status").get<std::string>();
      o.solve_seconds = entry.value("solve_seconds", 0.0);
      result.outcomes.push_back(std::move(o));
    }
  } catch (const Json::exception& e) {
    throw ParseError(std::string("results message: ") + e.what());
  }
  return result;
}

std::string canonical_payload(const EvalResult& result) {
  return result_to_json(result, false).dump();
}

}  // namespace mhsp::runtime
