#ifndef HMDESIGN_QUADRATURE_HPP
#define HMDESIGN_QUADRATURE_HPP

#include <vector>

namespace hmdesign {

// Gauss-Hermite rule for integral f(x) exp(-x^2) dx: sum_i w[i] f(x[i]).
struct GhRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Nodes/weights via Golub-Welsch on the Hermite Jacobi matrix. Results are
// cached per order; safe to call concurrently.
const GhRule& gh_rule(int order);

}  // namespace hmdesign

#endif
