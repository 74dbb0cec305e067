#pragma once

#include <json.hpp>

#include "nlbs/impact.hpp"
#include "nlbs/payoff.hpp"

namespace nlbs {

nlohmann::json impact_to_json(const ImpactSpec& spec);
ImpactSpec impact_from_json(const nlohmann::json& j);

nlohmann::json curve_to_json(const LambdaCurve& curve);
LambdaCurve curve_from_json(const nlohmann::json& j);

nlohmann::json payoff_to_json(const Payoff& payoff);
Payoff payoff_from_json(const nlohmann::json& j);

}  // namespace nlbs
