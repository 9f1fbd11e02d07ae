#pragma once

#include <string>

#include "rsmdp/model.hpp"

namespace rsmdp {

// Built-in three-state fixture behind the `example22` CLI subcommand: a
// cost-free absorbing state 0, a controlled state 1 that either mixes
// between itself and 0 (action 0, stickiness rho) or jumps to 2 (action 1),
// and a single-action state 2 sticky with probability rho^2.  Cost equals
// the state index.  Every policy drains into state 0, yet for e^{lambda}*rho
// large enough the sticky loops dominate the exponential average, which
// makes the fixture exercise all three solver regimes.
Mdp example22_model(double rho); // requires rho in (0,1)

// Regime classification by the sign of e^{lambda}*rho - 1 (tolerance 1e-12
// treats the knife-edge product as equal to 1).  Returns one of
// "e^lambda*rho>1", "e^lambda*rho=1", "e^lambda*rho<1".
std::string example22_regime(double rho, RiskCoefficient lambda);

// Closed-form optimal value: (0, 1 + ln(rho)/lambda, 2 + 2 ln(rho)/lambda)
// in the supercritical regime, identically zero otherwise.
ValueFunction example22_jstar(double rho, RiskCoefficient lambda);

} // namespace rsmdp
