#ifndef HMDESIGN_OPTIMIZER_HPP
#define HMDESIGN_OPTIMIZER_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hmdesign/capacity.hpp"
#include "hmdesign/constellation.hpp"
#include "hmdesign/rng.hpp"

namespace hmdesign {

enum class Symmetry { none, central };

// One design instance: maximize r_L at snr_l subject to r_H >= r_star at
// snr_h, average power <= power, and optionally PAPR <= papr_limit.
struct ProblemSpec {
    int m_h = 2;
    int m_l = 2;
    double snr_h_db = 0.0;
    double snr_l_db = 0.0;
    double r_star = 0.0;
    double power = 1.0;
    std::optional<double> papr_limit;
    Symmetry symmetry = Symmetry::none;

    void validate() const;
    int constraint_count() const { return papr_limit ? 3 : 2; }
};

struct SolverConfig {
    int starts = 20;
    std::uint64_t seed = 0;
    double mu_factor = 10.0;   // barrier parameter multiplier per outer iteration
    double kkt_tol = 1e-6;
    int max_outer = 50;
    int max_inner = 100;       // Newton iterations per outer
    double fd_step = 1e-5;     // central finite-difference step
    double pinv_threshold = 1e-10;  // relative singular-value cutoff

    void validate() const;
};

struct StartLog {
    int start_index = 0;
    bool start_found = false;
    bool converged = false;
    double r_l = 0.0;  // local optimum value
    double kkt_residual = 0.0;
    int iterations = 0;
};

struct SolveResult {
    Constellation constellation;
    double r_h_achieved = 0.0;
    double r_l_achieved = 0.0;
    double power_used = 0.0;
    double papr_used = 0.0;
    double kkt_residual = 0.0;
    std::vector<StartLog> start_logs;
};

// Variable layout: v = (Re z_1, Im z_1, Re z_2, Im z_2, ...). In central
// mode v holds the first (b_H = 00) cluster only and complexify routes
// through expand_central_symmetric.
std::vector<double> realify(const Constellation& c);
// Extracts the cluster vector of a centrally symmetric constellation;
// rejects constellations that are not symmetric within 1e-9.
std::vector<double> realify_cluster(const Constellation& c);
Constellation complexify(std::span<const double> v, int m_h, int m_l,
                         Symmetry symmetry = Symmetry::none);

// Objective and constraint values at v: f0 = -r_L, f1 = r_star - r_H,
// f2 = avg power - p, f3 = peak power - xi * avg power (when constrained).
struct ProblemEval {
    double f0 = 0.0;
    std::vector<double> f;
};
ProblemEval eval_problem(std::span<const double> v, const ProblemSpec& spec,
                         const QuadratureSpec& q);

// Derivative bundle for one primal-dual Newton step. Rate gradients are
// central finite differences; power and PAPR gradients are closed-form.
struct ProblemDerivs {
    Eigen::VectorXd grad_f0;
    Eigen::MatrixXd jac_f;  // one row per constraint
    Eigen::VectorXd f;      // constraint values (smooth PAPR surrogate)
    Eigen::MatrixXd hess_lagrangian;
};
// Standalone derivative evaluation (fresh quasi-Newton state, i.e. identity
// MI curvature plus exact power/PAPR Hessians weighted by lambda).
ProblemDerivs derivatives(std::span<const double> v, const ProblemSpec& spec,
                          const QuadratureSpec& q, const SolverConfig& cfg,
                          std::span<const double> lambda = {});

struct IpState {
    Eigen::VectorXd v;
    Eigen::VectorXd lambda;
    double mu = 10.0;
};
struct NewtonStep {
    Eigen::VectorXd dv;
    Eigen::VectorXd dlambda;
    bool used_pinv = false;
};
// Solves the block system
//   [ H            Df^T     ] [dv     ]   [ r_pri  ]
//   [ -diag(l) Df  -diag(f) ] [dlambda] = -[ r_cent ]
// with r_pri = grad f0 + Df^T lambda, r_cent = -lambda.*f - (1/mu)1.
// Falls back to the pseudo-inverse when the matrix is singular (smallest
// singular value below pinv_threshold times the largest).
NewtonStep ip_newton_step(const IpState& state, const ProblemDerivs& d, double pinv_threshold);

// Strictly feasible start vector: randomized H-QAM-shaped or Gaussian-cloud
// seeds normalized slightly below the power budget, repaired toward higher
// r_H / lower PAPR when needed. Throws NoFeasibleStart once attempts are
// exhausted.
std::vector<double> feasible_start(const ProblemSpec& spec, const QuadratureSpec& q,
                                   CounterRng& rng, int max_attempts = 60);

// Multi-start primal-dual interior-point solve over free constellations.
// Deterministic for fixed (spec, cfg, q). Throws Infeasible if no start
// succeeds.
SolveResult solve(const ProblemSpec& spec, const SolverConfig& cfg, const QuadratureSpec& q);

// Same machinery over the 2-parameter H-QAM family (m_h == 2, m_l in {2,3}).
std::pair<HqamParams, SolveResult> optimize_hqam(const ProblemSpec& spec, const SolverConfig& cfg,
                                                 const QuadratureSpec& q);

}  // namespace hmdesign

#endif
