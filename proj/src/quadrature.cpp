#include "latgas/quadrature.hpp"

#include <gsl/gsl_integration.h>

#include <memory>
#include <stdexcept>

namespace latgas {
namespace {

struct FixedWorkspaceDeleter {
    void operator()(gsl_integration_fixed_workspace* w) const noexcept { gsl_integration_fixed_free(w); }
};

QuadratureRule read_rule(const gsl_integration_fixed_type* type, std::size_t points, double a, double b) {
    if (points == 0) throw std::invalid_argument("quadrature rule needs at least one point");
    std::unique_ptr<gsl_integration_fixed_workspace, FixedWorkspaceDeleter> ws(
        gsl_integration_fixed_alloc(type, points, a, b, 0.0, 0.0));
    if (!ws) throw std::runtime_error("gsl_integration_fixed_alloc failed");
    const double* x = gsl_integration_fixed_nodes(ws.get());
    const double* w = gsl_integration_fixed_weights(ws.get());
    return QuadratureRule{std::vector<double>(x, x + points), std::vector<double>(w, w + points)};
}

}  // namespace

QuadratureRule gauss_legendre(std::size_t points, double a, double b) {
    if (!(b > a)) throw std::invalid_argument("gauss_legendre: need a < b");
    return read_rule(gsl_integration_fixed_legendre, points, a, b);
}

QuadratureRule gauss_hermite_normal(std::size_t points) {
    // GSL's Hermite rule integrates against exp(-b (x - a)^2); b = 1/2 gives the
    // normal kernel up to the factor sqrt(2 pi), removed by normalising the weights.
    auto rule = read_rule(gsl_integration_fixed_hermite, points, 0.0, 0.5);
    double total = 0.0;
    for (double w : rule.weights) total += w;
    for (double& w : rule.weights) w /= total;
    return rule;
}

}  // namespace latgas
