#include "hmdesign/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "hmdesign/errors.hpp"

namespace hmdesign {

namespace {

GhRule compute_gh(int order) {
    if (order < 1) throw InvalidSpec("Gauss-Hermite order must be >= 1");
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        const double b = std::sqrt(k / 2.0);
        jacobi(k, k - 1) = b;
        jacobi(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
    const double sqrt_pi = 1.7724538509055160272981674833411;
    GhRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    for (int i = 0; i < order; ++i) {
        rule.nodes[i] = es.eigenvalues()(i);
        const double v0 = es.eigenvectors()(0, i);
        rule.weights[i] = sqrt_pi * v0 * v0;
    }
    // enforce exact symmetry of the rule; eigensolver output is only close
    for (int i = 0, j = order - 1; i < j; ++i, --j) {
        const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        rule.nodes[i] = -x;
        rule.nodes[j] = x;
        const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
        rule.weights[i] = w;
        rule.weights[j] = w;
    }
    if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
    return rule;
}

}  // namespace

const GhRule& gh_rule(int order) {
    static std::mutex mtx;
    static std::map<int, std::unique_ptr<GhRule>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto& slot = cache[order];
    if (!slot) slot = std::make_unique<GhRule>(compute_gh(order));
    return *slot;
}

}  // namespace hmdesign
