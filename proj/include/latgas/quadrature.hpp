#pragma once

#include <cstddef>
#include <vector>

namespace latgas {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Gauss-Legendre rule on [a, b]; weights sum to b - a.
QuadratureRule gauss_legendre(std::size_t points, double a = 0.0, double b = 1.0);

/// Gauss-Hermite rule for expectations over a standard normal:
/// E[f(Z)] ~ sum_k weights[k] * f(nodes[k]); weights sum to 1.
QuadratureRule gauss_hermite_normal(std::size_t points);

}  // namespace latgas
