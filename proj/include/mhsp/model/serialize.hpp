#pragma once

#include "mhsp/common/json_io.hpp"
#include "mhsp/model/instance.hpp"

namespace mhsp::model {

Json subproblem_to_json(const OperationalSubproblem& sp);
OperationalSubproblem subproblem_from_json(const Json& value);

}  // namespace mhsp::model
