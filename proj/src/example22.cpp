#include "rsmdp/example22.hpp"

#include <cmath>

#include "rsmdp/errors.hpp"

namespace rsmdp {

Mdp example22_model(double rho) {
    if (!(rho > 0.0 && rho < 1.0))
        throw PreconditionError("rho must lie strictly inside (0, 1), got " + std::to_string(rho));
    std::vector<std::string> states = {"0", "1", "2"};
    std::vector<std::string> actions = {"0", "1"};
    std::vector<std::vector<int>> admissible = {{0}, {0, 1}, {0}};
    std::vector<std::vector<double>> cost = {{0.0}, {1.0, 1.0}, {2.0}};
    std::vector<std::vector<std::vector<double>>> kernel = {
        {{1.0, 0.0, 0.0}},
        {{1.0 - rho, rho, 0.0}, {0.0, 0.0, 1.0}},
        {{1.0 - rho * rho, 0.0, rho * rho}},
    };
    return Mdp(std::move(states), std::move(actions), std::move(admissible), std::move(cost),
               std::move(kernel));
}

std::string example22_regime(double rho, RiskCoefficient lambda) {
    double product = std::exp(lambda.value()) * rho;
    if (std::abs(product - 1.0) <= 1e-12) return "e^lambda*rho=1";
    return product > 1.0 ? "e^lambda*rho>1" : "e^lambda*rho<1";
}

ValueFunction example22_jstar(double rho, RiskCoefficient lambda) {
    if (example22_regime(rho, lambda) == "e^lambda*rho>1") {
        double j1 = 1.0 + std::log(rho) / lambda.value();
        return {0.0, j1, 2.0 * j1};
    }
    return {0.0, 0.0, 0.0};
}

} // namespace rsmdp
