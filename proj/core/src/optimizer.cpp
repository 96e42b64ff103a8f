#include "hmdesign/optimizer.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <future>
#include <limits>
#include <string>

#include "hmdesign/errors.hpp"
#include "hmdesign/quadrature.hpp"

namespace hmdesign {

namespace {

constexpr double kPaprBeta0 = 50.0;  // smooth-max sharpness, doubled per outer iteration
constexpr double kPaprBetaMax = 51200.0;
constexpr double kStartPowerFraction = 0.995;  // seeds sit strictly inside the power budget
constexpr double kFeasibilityMargin = 1e-6;    // required r_H slack at a start

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Linear variable layouts. Point coordinates are always map * v, so power
// and peak terms have exact closed-form derivatives in every mode.
struct Param {
    enum class Kind { full, central, hqam };
    Kind kind = Kind::full;
    int m_h = 0;
    int m_l = 0;
    int n = 0;    // constellation points
    int dim = 0;  // variables
    MatrixXd map;       // (2n) x dim
    MatrixXd pow_hess;  // 2/n * map^T map

    Constellation decode(const VectorXd& v) const {
        const VectorXd coords = map * v;
        std::vector<cdouble> pts(static_cast<size_t>(n));
        for (int k = 0; k < n; ++k) {
            pts[static_cast<size_t>(k)] = {coords(2 * k), coords(2 * k + 1)};
        }
        return Constellation(m_h, m_l, std::move(pts));
    }

    double power(const VectorXd& v) const { return (map * v).squaredNorm() / n; }
    VectorXd power_grad(const VectorXd& v) const {
        return (2.0 / n) * (map.transpose() * (map * v));
    }
};

Param make_full(int m_h, int m_l) {
    Param p;
    p.kind = Param::Kind::full;
    p.m_h = m_h;
    p.m_l = m_l;
    p.n = 1 << (m_h + m_l);
    p.dim = 2 * p.n;
    p.map = MatrixXd::Identity(2 * p.n, p.dim);
    p.pow_hess = (2.0 / p.n) * MatrixXd::Identity(p.dim, p.dim);
    return p;
}

Param make_central(int m_l) {
    Param p;
    p.kind = Param::Kind::central;
    p.m_h = 2;
    p.m_l = m_l;
    const int nc = 1 << m_l;
    p.n = 4 * nc;
    p.dim = 2 * nc;
    p.map = MatrixXd::Zero(2 * p.n, p.dim);
    // groups: zc, -conj(zc), conj(zc), -zc
    static constexpr double kSigns[4][2] = {{1, 1}, {-1, 1}, {1, -1}, {-1, -1}};
    for (int g = 0; g < 4; ++g) {
        for (int i = 0; i < nc; ++i) {
            const int row = 2 * (g * nc + i);
            p.map(row, 2 * i) = kSigns[g][0];
            p.map(row + 1, 2 * i + 1) = kSigns[g][1];
        }
    }
    p.pow_hess = (2.0 / p.n) * (p.map.transpose() * p.map);
    return p;
}

Param make_hqam(int m_l) {
    Param p;
    p.kind = Param::Kind::hqam;
    p.m_h = 2;
    p.m_l = m_l;
    const std::vector<cdouble> base = hqam_base(m_l);
    const int gs = 1 << m_l;
    p.n = 4 * gs;
    p.dim = 2;
    p.map = MatrixXd::Zero(2 * p.n, 2);
    for (int bh = 0; bh < 4; ++bh) {
        const cdouble q{1.0 - 2.0 * ((bh >> 1) & 1), 1.0 - 2.0 * (bh & 1)};
        for (int bl = 0; bl < gs; ++bl) {
            const int k = bh * gs + bl;
            p.map(2 * k, 0) = q.real();
            p.map(2 * k + 1, 0) = q.imag();
            p.map(2 * k, 1) = base[static_cast<size_t>(bl)].real();
            p.map(2 * k + 1, 1) = base[static_cast<size_t>(bl)].imag();
        }
    }
    p.pow_hess = (2.0 / p.n) * (p.map.transpose() * p.map);
    return p;
}

Param make_param(const ProblemSpec& spec) {
    return spec.symmetry == Symmetry::central ? make_central(spec.m_l)
                                              : make_full(spec.m_h, spec.m_l);
}

double eval_rl(const Param& p, const VectorXd& v, const ChannelSpec& ch_l,
               const QuadratureSpec& q) {
    return rate_lp(p.decode(v), ch_l, q);
}

double eval_rh(const Param& p, const VectorXd& v, const ChannelSpec& ch_h,
               const QuadratureSpec& q) {
    return rate_hp(p.decode(v), ch_h, q);
}

// smoothmax_k |z_k|^2 at sharpness beta (beta <= 0 selects the true max)
struct PeakTerm {
    double value = 0.0;
    VectorXd grad;
    MatrixXd hess;
};

PeakTerm smooth_peak(const Param& p, const VectorXd& v, double beta, bool with_hess) {
    const VectorXd coords = p.map * v;
    PeakTerm out;
    std::vector<double> pk(static_cast<size_t>(p.n));
    double pmax = 0.0;
    int argmax = 0;
    for (int k = 0; k < p.n; ++k) {
        pk[static_cast<size_t>(k)] =
            coords(2 * k) * coords(2 * k) + coords(2 * k + 1) * coords(2 * k + 1);
        if (pk[static_cast<size_t>(k)] > pmax) {
            pmax = pk[static_cast<size_t>(k)];
            argmax = k;
        }
    }
    if (beta <= 0.0) {
        out.value = pmax;
        out.grad = 2.0 * (coords(2 * argmax) * p.map.row(2 * argmax).transpose() +
                          coords(2 * argmax + 1) * p.map.row(2 * argmax + 1).transpose());
        if (with_hess) {
            out.hess = 2.0 * (p.map.row(2 * argmax).transpose() * p.map.row(2 * argmax) +
                              p.map.row(2 * argmax + 1).transpose() * p.map.row(2 * argmax + 1));
        }
        return out;
    }
    double s = 0.0;
    std::vector<double> w(static_cast<size_t>(p.n));
    for (int k = 0; k < p.n; ++k) {
        w[static_cast<size_t>(k)] = std::exp(beta * (pk[static_cast<size_t>(k)] - pmax));
        s += w[static_cast<size_t>(k)];
    }
    out.value = pmax + std::log(s) / beta;
    out.grad = VectorXd::Zero(p.dim);
    MatrixXd second_moment;
    if (with_hess) {
        out.hess = MatrixXd::Zero(p.dim, p.dim);
        second_moment = MatrixXd::Zero(p.dim, p.dim);
    }
    for (int k = 0; k < p.n; ++k) {
        const double sk = w[static_cast<size_t>(k)] / s;
        if (sk < 1e-14) continue;
        const VectorXd gk = 2.0 * (coords(2 * k) * p.map.row(2 * k).transpose() +
                                   coords(2 * k + 1) * p.map.row(2 * k + 1).transpose());
        out.grad += sk * gk;
        if (with_hess) {
            out.hess += sk * 2.0 *
                        (p.map.row(2 * k).transpose() * p.map.row(2 * k) +
                         p.map.row(2 * k + 1).transpose() * p.map.row(2 * k + 1));
            second_moment += sk * (gk * gk.transpose());
        }
    }
    if (with_hess) {
        out.hess += beta * (second_moment - out.grad * out.grad.transpose());
    }
    return out;
}

struct FVals {
    double f0 = 0.0;
    VectorXd f;
    double r_l = 0.0;
    double r_h = 0.0;
};

// beta <= 0 uses the true max for the PAPR constraint
FVals eval_fs(const Param& p, const ProblemSpec& spec, const QuadratureSpec& q, const VectorXd& v,
              double beta) {
    const ChannelSpec ch_h = ChannelSpec::from_snr_db(spec.snr_h_db, spec.power);
    const ChannelSpec ch_l = ChannelSpec::from_snr_db(spec.snr_l_db, spec.power);
    FVals out;
    out.r_l = eval_rl(p, v, ch_l, q);
    out.r_h = eval_rh(p, v, ch_h, q);
    out.f0 = -out.r_l;
    out.f.resize(spec.constraint_count());
    out.f(0) = spec.r_star - out.r_h;
    const double pw = p.power(v);
    out.f(1) = pw - spec.power;
    if (spec.papr_limit) {
        out.f(2) = smooth_peak(p, v, beta, false).value - *spec.papr_limit * pw;
    }
    return out;
}

VectorXd fd_rate_grad(const Param& p, const VectorXd& v, bool lp, const ChannelSpec& ch,
                      const QuadratureSpec& q, double h) {
    VectorXd g(p.dim);
    VectorXd vt = v;
    for (int i = 0; i < p.dim; ++i) {
        const double orig = vt(i);
        vt(i) = orig + h;
        const double up = lp ? eval_rl(p, vt, ch, q) : eval_rh(p, vt, ch, q);
        vt(i) = orig - h;
        const double dn = lp ? eval_rl(p, vt, ch, q) : eval_rh(p, vt, ch, q);
        vt(i) = orig;
        g(i) = (up - dn) / (2.0 * h);
    }
    return g;
}

struct GradSet {
    VectorXd g0;    // grad f0 = -grad r_L
    MatrixXd jac;   // one row per constraint
    PeakTerm peak;  // valid when PAPR-constrained
};

GradSet eval_grads(const Param& p, const ProblemSpec& spec, const QuadratureSpec& q,
                   const VectorXd& v, double beta, double h) {
    const ChannelSpec ch_h = ChannelSpec::from_snr_db(spec.snr_h_db, spec.power);
    const ChannelSpec ch_l = ChannelSpec::from_snr_db(spec.snr_l_db, spec.power);
    GradSet g;
    g.g0 = -fd_rate_grad(p, v, true, ch_l, q, h);
    const int k = spec.constraint_count();
    g.jac.resize(k, p.dim);
    g.jac.row(0) = -fd_rate_grad(p, v, false, ch_h, q, h).transpose();
    g.jac.row(1) = p.power_grad(v).transpose();
    if (spec.papr_limit) {
        g.peak = smooth_peak(p, v, beta, true);
        g.jac.row(2) = (g.peak.grad - *spec.papr_limit * p.power_grad(v)).transpose();
    }
    return g;
}

MatrixXd lagrangian_hessian(const Param& p, const ProblemSpec& spec, const MatrixXd& mi_part,
                            const GradSet& g, const VectorXd& lambda) {
    MatrixXd h = mi_part + lambda(1) * p.pow_hess;
    if (spec.papr_limit) {
        h += lambda(2) * (g.peak.hess - *spec.papr_limit * p.pow_hess);
    }
    return h;
}

double barrier_merit(const FVals& fv, double mu) {
    double m = fv.f0;
    for (int i = 0; i < fv.f.size(); ++i) {
        if (!(fv.f(i) < 0.0)) return std::numeric_limits<double>::infinity();
        m -= std::log(-fv.f(i)) / mu;
    }
    return m;
}

struct LocalOutcome {
    bool started = false;
    bool converged = false;
    VectorXd v_best;
    double r_l_best = -std::numeric_limits<double>::infinity();
    double kkt_res = std::numeric_limits<double>::infinity();
    int iterations = 0;
};

// Path-following variant: the duals are recentered to lambda_i = 1/(mu*(-f_i))
// at every iteration, which zeroes r_cent and makes the Eq.-style primal-dual
// step an exact descent direction for the log-barrier merit (the condensed
// system H + J^T diag(lambda/(-f)) J is positive semidefinite). The returned
// dlambda is the dual move along the central path; stepping lambda explicitly
// is unnecessary because the recentering reproduces it.
LocalOutcome local_solve(const Param& p, const ProblemSpec& spec, const SolverConfig& cfg,
                         const QuadratureSpec& q, const VectorXd& v0) {
    LocalOutcome out;

    double mu = 10.0;
    double beta = spec.papr_limit ? kPaprBeta0 : -1.0;

    VectorXd v = v0;
    FVals fv = eval_fs(p, spec, q, v, beta);
    for (int i = 0; i < fv.f.size(); ++i) {
        if (!(fv.f(i) < 0.0)) return out;  // start not strictly feasible
    }
    out.started = true;
    const int k = spec.constraint_count();
    VectorXd lambda(k);

    out.v_best = v;
    out.r_l_best = fv.r_l;

    double res = std::numeric_limits<double>::infinity();
    for (int outer = 0; outer < cfg.max_outer; ++outer) {
        MatrixXd mi_hess = MatrixXd::Identity(p.dim, p.dim);  // refreshed per outer
        bool have_prev = false;
        bool scaled_b = false;
        VectorXd v_prev, g0_prev, g1_prev;
        bool inner_converged = false;
        int no_progress = 0;
        double res_best = std::numeric_limits<double>::infinity();

        for (int inner = 0; inner < cfg.max_inner; ++inner) {
            ++out.iterations;
            for (int i = 0; i < k; ++i) lambda(i) = 1.0 / (mu * -fv.f(i));
            GradSet g = eval_grads(p, spec, q, v, beta, cfg.fd_step);

            if (have_prev) {
                // damped BFGS on the rate part of the Lagrangian
                const VectorXd s = v - v_prev;
                const VectorXd y = (g.g0 + lambda(0) * g.jac.row(0).transpose()) -
                                   (g0_prev + lambda(0) * g1_prev);
                const double sy_raw = s.dot(y);
                if (!scaled_b && sy_raw > 1e-14) {
                    // size the initial metric from the first curvature pair
                    mi_hess *= std::clamp(sy_raw / s.squaredNorm(), 1e-3, 1e3);
                    scaled_b = true;
                }
                const VectorXd bs = mi_hess * s;
                const double sbs = s.dot(bs);
                double sy = sy_raw;
                if (sbs > 1e-14) {
                    VectorXd yd = y;
                    if (sy < 0.2 * sbs) {
                        const double theta = 0.8 * sbs / (sbs - sy);
                        yd = theta * y + (1.0 - theta) * bs;
                        sy = s.dot(yd);
                    }
                    if (sy > 1e-14) {
                        mi_hess += (yd * yd.transpose()) / sy - (bs * bs.transpose()) / sbs;
                    }
                }
            }
            v_prev = v;
            g0_prev = g.g0;
            g1_prev = g.jac.row(0).transpose();
            have_prev = true;

            ProblemDerivs d;
            d.grad_f0 = g.g0;
            d.jac_f = g.jac;
            d.f = fv.f;
            d.hess_lagrangian = lagrangian_hessian(p, spec, mi_hess, g, lambda);
            {
                // the smooth-max PAPR term is difference-of-convex; clamp the
                // spectrum so the condensed system stays positive definite
                Eigen::SelfAdjointEigenSolver<MatrixXd> es(d.hess_lagrangian);
                const double lo = es.eigenvalues().minCoeff();
                if (lo < 1e-9) {
                    d.hess_lagrangian +=
                        (1e-9 - lo) * MatrixXd::Identity(p.dim, p.dim);
                }
            }

            const VectorXd r_pri = g.g0 + g.jac.transpose() * lambda;  // = grad of the barrier merit
            res = r_pri.lpNorm<Eigen::Infinity>();
            if (std::getenv("HMD_TRACE")) {
                std::fprintf(stderr, "o=%d i=%d mu=%.1e res=%.3e f=(%.3e %.3e) rl=%.7f\n",
                             outer, inner, mu, res, fv.f(0), fv.f(1), fv.r_l);
            }
            out.kkt_res = std::max(res, 1.0 / mu);
            const double tol_mu = std::max(0.5 * cfg.kkt_tol, 0.05 / mu);
            if (res <= tol_mu) {
                inner_converged = true;
                break;
            }
            if (res < 0.9 * res_best) {
                res_best = res;
                no_progress = 0;
            } else if (++no_progress > 8) {
                break;  // not recentering fast enough; advance mu
            }

            NewtonStep step;
            try {
                IpState st{v, lambda, mu};
                step = ip_newton_step(st, d, cfg.pinv_threshold);
            } catch (const LinearSolveFailure&) {
                break;  // stall at this barrier level; advance mu
            }

            const double dphi = r_pri.dot(step.dv);
            if (!(dphi < 0.0)) break;  // numerically stationary at this mu
            const double phi0 = barrier_merit(fv, mu);

            double alpha = 1.0;
            // fraction-to-boundary estimate from the constraint linearization
            for (int i = 0; i < k; ++i) {
                const double di = g.jac.row(i).dot(step.dv);
                if (di > 0.0) alpha = std::min(alpha, 0.99 * (-fv.f(i)) / di);
            }
            alpha = std::min(alpha, 1.0);
            bool accepted = false;
            FVals fv_trial;
            VectorXd v_trial;
            for (int bt = 0; bt < 40 && alpha > 1e-13; ++bt) {
                v_trial = v + alpha * step.dv;
                fv_trial = eval_fs(p, spec, q, v_trial, beta);
                const double phi_t = barrier_merit(fv_trial, mu);
                // the constraints are nonlinear, so also enforce the
                // fraction-to-boundary rule on the trial values: a step may
                // shrink a boundary distance by at most two orders, which
                // keeps the quadratic model from overshooting through the
                // barrier center and gluing the iterate to the boundary
                bool ftb_ok = true;
                for (int i = 0; i < k; ++i) {
                    if (fv_trial.f(i) > 0.01 * fv.f(i)) {
                        ftb_ok = false;
                        break;
                    }
                }
                if (std::isfinite(phi_t) && ftb_ok && phi_t <= phi0 + 1e-4 * alpha * dphi) {
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted) break;  // line search stalled; advance mu

            v = v_trial;
            fv = fv_trial;
            if (fv.r_l > out.r_l_best) {
                out.r_l_best = fv.r_l;
                out.v_best = v;
            }
        }

        if (inner_converged && 1.0 / mu <= 0.5 * cfg.kkt_tol) {
            out.converged = true;
            break;
        }
        mu *= cfg.mu_factor;
        if (spec.papr_limit) {
            beta = std::min(beta * 2.0, kPaprBetaMax);
            fv = eval_fs(p, spec, q, v, beta);  // f3 shrinks as beta grows; still feasible
        }
        if (mu > 1e14) break;
    }
    return out;
}

// ---- feasible start machinery ----------------------------------------------

// Clips peaks until the smooth-max PAPR surrogate is strictly feasible,
// preserving the target average power. Returns false if the cap cannot be
// met (e.g. papr_limit == 1).
bool repair_papr(std::vector<cdouble>& pts, double target_power, double papr_limit) {
    const int n = static_cast<int>(pts.size());
    const double surrogate_gap = std::log(static_cast<double>(n)) / kPaprBeta0;
    for (int pass = 0; pass < 200; ++pass) {
        double avg = 0.0;
        for (const cdouble& z : pts) avg += std::norm(z);
        avg /= n;
        if (avg <= 0.0) return false;
        const double scale = std::sqrt(target_power / avg);
        for (cdouble& z : pts) z *= scale;

        double peak = 0.0;
        for (const cdouble& z : pts) peak = std::max(peak, std::norm(z));
        if (peak + surrogate_gap < papr_limit * target_power * (1.0 - 1e-6)) return true;

        const double cap = (papr_limit * target_power - surrogate_gap) * 0.93;
        if (cap <= 0.0) return false;
        for (cdouble& z : pts) {
            const double pw = std::norm(z);
            if (pw > cap) z *= std::sqrt(cap / pw);
        }
    }
    return false;
}

std::vector<cdouble> random_cloud(int n, CounterRng& rng) {
    std::vector<cdouble> pts(static_cast<size_t>(n));
    for (cdouble& z : pts) z = rng.next_cnormal();
    return pts;
}

// Two-level cloud: distinct group centers plus shrinking intra-group offsets;
// generic replacement for H-QAM seeds when m_h != 2.
std::vector<cdouble> clustered_cloud(int m_h, int m_l, double offset_scale, CounterRng& rng) {
    const int groups = 1 << m_h;
    const int gs = 1 << m_l;
    std::vector<cdouble> centers(static_cast<size_t>(groups));
    for (cdouble& z : centers) z = rng.next_cnormal();
    std::vector<cdouble> pts;
    pts.reserve(static_cast<size_t>(groups * gs));
    for (int g = 0; g < groups; ++g) {
        for (int t = 0; t < gs; ++t) {
            pts.push_back(centers[static_cast<size_t>(g)] + offset_scale * rng.next_cnormal());
        }
    }
    return pts;
}

std::vector<cdouble> jittered_hqam(int m_l, double theta, double jitter, double unit_power,
                                   CounterRng& rng) {
    const double t = std::sqrt(unit_power / 2.0);
    Constellation c = hqam({t * std::cos(theta), t * std::sin(theta), m_l});
    std::vector<cdouble> pts = c.points();
    const double amp = jitter * std::sqrt(unit_power / c.size());
    for (cdouble& z : pts) z += amp * rng.next_cnormal();
    return pts;
}

VectorXd encode_start(const Param& p, const std::vector<cdouble>& pts) {
    const int count = p.kind == Param::Kind::central ? (1 << p.m_l) : p.n;
    VectorXd v(2 * count);
    for (int i = 0; i < count; ++i) {
        v(2 * i) = pts[static_cast<size_t>(i)].real();
        v(2 * i + 1) = pts[static_cast<size_t>(i)].imag();
    }
    return v;
}

// In central mode seeds are built in cluster space (the expansion supplies
// the other three groups), so the seed families generate 2^m_l points.
std::vector<cdouble> seed_points(const Param& p, const ProblemSpec& spec, int attempt,
                                 double shrink, CounterRng& rng) {
    const bool central = p.kind == Param::Kind::central;
    const bool hqam_family =
        (attempt % 2 == 0) && spec.m_h == 2 && (spec.m_l == 2 || spec.m_l == 3);
    if (hqam_family) {
        const double theta_max = 1.45 * shrink;
        const double theta = 0.02 + (theta_max - 0.02) * rng.next_double();
        const double jitter = 0.25 * shrink * rng.next_double();
        std::vector<cdouble> pts = jittered_hqam(spec.m_l, theta, jitter, 1.0, rng);
        if (!central) return pts;
        return std::vector<cdouble>(pts.begin(), pts.begin() + (1 << spec.m_l));
    }
    if (spec.m_h != 2 && attempt % 2 == 0) {
        return clustered_cloud(spec.m_h, spec.m_l, 0.3 * shrink, rng);
    }
    const int n = central ? (1 << spec.m_l) : (1 << (spec.m_h + spec.m_l));
    return random_cloud(n, rng);
}

std::optional<VectorXd> try_start(const Param& p, const ProblemSpec& spec,
                                  const QuadratureSpec& q, const std::vector<cdouble>& pts,
                                  double margin) {
    // normalize in v-space so the power constraint holds strictly
    VectorXd v = encode_start(p, pts);
    const double pw = p.power(v);
    if (!(pw > 0.0)) return std::nullopt;
    v *= std::sqrt(kStartPowerFraction * spec.power / pw);

    if (spec.papr_limit) {
        // clip factors depend on |z| only, so in central mode all four images
        // of a cluster point shrink identically and symmetry is preserved
        std::vector<cdouble> repaired = p.decode(v).points();
        if (!repair_papr(repaired, kStartPowerFraction * spec.power, *spec.papr_limit)) {
            return std::nullopt;
        }
        v = encode_start(p, repaired);
    }

    const ChannelSpec ch_h = ChannelSpec::from_snr_db(spec.snr_h_db, spec.power);
    if (eval_rh(p, v, ch_h, q) <= spec.r_star + margin) return std::nullopt;
    return v;
}

VectorXd feasible_start_impl(const Param& p, const ProblemSpec& spec, const QuadratureSpec& q,
                             CounterRng& rng, int max_attempts) {
    if (spec.r_star >= spec.m_h) {
        throw NoFeasibleStart("r_star >= m_h exceeds the BICM rate bound");
    }
    double shrink = 1.0;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        // prefer seeds with real r_H headroom so the initial duals are
        // well-scaled; fall back to the bare margin for tight thresholds
        const double margin = attempt < max_attempts / 2 ? 0.02 : kFeasibilityMargin;
        const std::vector<cdouble> pts = seed_points(p, spec, attempt, shrink, rng);
        if (auto v = try_start(p, spec, q, pts, margin)) return *v;
        // insufficient r_H or PAPR headroom: contract jitter and cluster
        // spread toward the HP-favorable shape before the next attempt
        shrink *= 0.82;
    }
    throw NoFeasibleStart("no strictly feasible start after " + std::to_string(max_attempts) +
                          " attempts (r_star likely infeasible at this SNR/power)");
}

VectorXd encode_from_hqam(const Param& p, const ProblemSpec& spec, const Param& hq,
                          const VectorXd& v2) {
    std::vector<cdouble> pts = hq.decode(v2).points();
    if (p.kind == Param::Kind::central) {
        pts.resize(size_t{1} << spec.m_l);  // quadrant-0 cluster
    }
    return encode_start(p, pts);
}

// Deterministic H-QAM-shaped seed: coarse sweep plus golden-section polish
// of the scaling angle on the 0.995p power shell, maximizing r_L among
// feasible angles. Gives every solve one start near the best H-QAM shape,
// which the free optimizer can only improve on.
std::optional<VectorXd> best_theta_seed(const Param& p, const ProblemSpec& spec,
                                        const QuadratureSpec& q) {
    if (spec.m_h != 2 || (spec.m_l != 2 && spec.m_l != 3)) return std::nullopt;
    const ChannelSpec ch_h = ChannelSpec::from_snr_db(spec.snr_h_db, spec.power);
    const ChannelSpec ch_l = ChannelSpec::from_snr_db(spec.snr_l_db, spec.power);

    const Param hq = make_hqam(spec.m_l);
    auto seed_v = [&](double theta) {
        VectorXd v(2);
        v << std::cos(theta), std::sin(theta);
        return VectorXd(v * std::sqrt(kStartPowerFraction * spec.power / hq.power(v)));
    };
    double seed_margin = 0.02;
    auto feasible = [&](double theta) {
        const VectorXd v = seed_v(theta);
        if (spec.papr_limit) {
            const double pw = hq.power(v);
            const double smax = smooth_peak(hq, v, kPaprBeta0, false).value;
            if (!(smax - *spec.papr_limit * pw < 0.0)) return false;
        }
        return eval_rh(hq, v, ch_h, q) > spec.r_star + seed_margin;
    };
    auto objective = [&](double theta) { return eval_rl(hq, seed_v(theta), ch_l, q); };

    const int grid = 25;
    const double theta_lo = 0.015;
    const double theta_hi = 1.5508;
    double best_theta = -1.0;
    double best_rl = -1.0;
    for (const double margin : {0.02, kFeasibilityMargin}) {
        seed_margin = margin;
        for (int i = 0; i < grid; ++i) {
            const double theta = theta_lo + (theta_hi - theta_lo) * i / (grid - 1);
            if (!feasible(theta)) continue;
            const double rl = objective(theta);
            if (rl > best_rl) {
                best_rl = rl;
                best_theta = theta;
            }
        }
        if (best_theta >= 0.0) break;
    }
    if (best_theta < 0.0) return std::nullopt;

    // golden-section polish one grid cell either side, feasible angles only
    const double step = (theta_hi - theta_lo) / (grid - 1);
    double lo = std::max(1e-3, best_theta - step);
    double hi = std::min(1.5707, best_theta + step);
    const double gr = 0.61803398874989484820458683436564;
    double x1 = hi - gr * (hi - lo);
    double x2 = lo + gr * (hi - lo);
    double f1 = feasible(x1) ? objective(x1) : -1.0;
    double f2 = feasible(x2) ? objective(x2) : -1.0;
    for (int it = 0; it < 40; ++it) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = feasible(x2) ? objective(x2) : -1.0;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = feasible(x1) ? objective(x1) : -1.0;
        }
    }
    double theta = f1 > f2 ? x1 : x2;
    if (!feasible(theta)) theta = best_theta;
    if (!feasible(theta)) return std::nullopt;
    return encode_from_hqam(p, spec, hq, seed_v(theta));
}

struct StartTask {
    bool have_v = false;
    VectorXd v0;
};

struct MultistartOut {
    SolveResult result;
    VectorXd v_final;
};

MultistartOut finish_result(const Param& p, const ProblemSpec& spec, const QuadratureSpec& q,
                            const VectorXd& v_raw, double kkt_res, std::vector<StartLog> logs) {
    // Proposition-1 polish: scaling up to the full power budget cannot reduce
    // either rate and leaves the PAPR unchanged.
    VectorXd v = v_raw;
    const double pw = p.power(v);
    if (pw > 0.0 && pw < spec.power) v *= std::sqrt(spec.power / pw);

    Constellation c = p.decode(v);
    const ChannelSpec ch_h = ChannelSpec::from_snr_db(spec.snr_h_db, spec.power);
    const ChannelSpec ch_l = ChannelSpec::from_snr_db(spec.snr_l_db, spec.power);
    SolveResult res{std::move(c), 0.0, 0.0, 0.0, 0.0, kkt_res, std::move(logs)};
    res.r_h_achieved = rate_hp(res.constellation, ch_h, q);
    res.r_l_achieved = rate_lp(res.constellation, ch_l, q);
    res.power_used = res.constellation.average_power();
    res.papr_used = res.constellation.papr();
    return {std::move(res), std::move(v)};
}

MultistartOut run_multistart(const Param& p, const ProblemSpec& spec, const SolverConfig& cfg,
                             const QuadratureSpec& q, const std::vector<StartTask>& tasks) {
    gh_rule(q.nodes_per_dim);  // warm the shared cache before spawning

    std::vector<std::future<LocalOutcome>> futures;
    futures.reserve(tasks.size());
    for (const StartTask& t : tasks) {
        futures.push_back(std::async(std::launch::async, [&p, &spec, &cfg, &q, &t]() {
            if (!t.have_v) return LocalOutcome{};
            return local_solve(p, spec, cfg, q, t.v0);
        }));
    }

    std::vector<LocalOutcome> outcomes;
    outcomes.reserve(tasks.size());
    for (auto& f : futures) outcomes.push_back(f.get());

    std::vector<StartLog> logs(tasks.size());
    int best = -1;
    double best_rl = 0.0;
    double best_papr = 0.0;
    for (size_t i = 0; i < outcomes.size(); ++i) {
        const LocalOutcome& o = outcomes[i];
        logs[i].start_index = static_cast<int>(i);
        logs[i].start_found = o.started;
        logs[i].converged = o.converged;
        logs[i].r_l = o.started ? o.r_l_best : 0.0;
        logs[i].kkt_residual = o.started ? o.kkt_res : 0.0;
        logs[i].iterations = o.iterations;
        if (!o.started) continue;
        const double papr = p.decode(o.v_best).papr();
        // greatest r_L wins; near-ties (1e-9) go to the smaller PAPR, then
        // the lower start index (first seen)
        const bool better =
            best < 0 || o.r_l_best > best_rl + 1e-9 ||
            (o.r_l_best >= best_rl - 1e-9 && papr < best_papr);
        if (better) {
            best = static_cast<int>(i);
            best_rl = o.r_l_best;
            best_papr = papr;
        }
    }
    if (best < 0) {
        double best_r_h = 0.0;
        if (spec.m_h == 2 && (spec.m_l == 2 || spec.m_l == 3)) {
            const ChannelSpec ch_h = ChannelSpec::from_snr_db(spec.snr_h_db, spec.power);
            const Constellation qpsk_like = hqam({std::sqrt(spec.power / 2.0), 0.0, spec.m_l});
            best_r_h = rate_hp(qpsk_like, ch_h, q);
        }
        throw Infeasible("no feasible start produced a solution (r_star = " +
                             std::to_string(spec.r_star) + ", best full-power H-QAM r_H = " +
                             std::to_string(best_r_h) + ")",
                         best_r_h);
    }
    return finish_result(p, spec, q, outcomes[static_cast<size_t>(best)].v_best,
                         outcomes[static_cast<size_t>(best)].kkt_res, std::move(logs));
}

}  // namespace

// ---- public surface ---------------------------------------------------------

void ProblemSpec::validate() const {
    if (m_h < 1) throw InvalidSpec("m_h must be >= 1");
    if (m_l < 0) throw InvalidSpec("m_l must be >= 0");
    if (!(snr_l_db >= snr_h_db)) throw InvalidSpec("snr_l_db must be >= snr_h_db");
    if (!(r_star >= 0.0) || !(r_star < m_h)) throw InvalidSpec("r_star must be in [0, m_h)");
    if (!(power > 0.0)) throw InvalidSpec("power must be > 0");
    if (papr_limit && !(*papr_limit >= 1.0)) throw InvalidSpec("papr_limit must be >= 1");
    if (symmetry == Symmetry::central && m_h != 2) {
        throw InvalidSpec("central symmetry requires m_h == 2");
    }
}

void SolverConfig::validate() const {
    if (starts < 1) throw InvalidSpec("starts must be >= 1");
    if (!(mu_factor > 1.0)) throw InvalidSpec("mu_factor must be > 1");
    if (!(kkt_tol > 0.0 && kkt_tol < 1.0)) throw InvalidSpec("kkt_tol must be in (0, 1)");
    if (max_outer < 1 || max_inner < 1) throw InvalidSpec("iteration limits must be >= 1");
    if (!(fd_step > 0.0)) throw InvalidSpec("fd_step must be > 0");
    if (!(pinv_threshold > 0.0)) throw InvalidSpec("pinv_threshold must be > 0");
}

std::vector<double> realify(const Constellation& c) {
    std::vector<double> v(static_cast<size_t>(2 * c.size()));
    for (int k = 0; k < c.size(); ++k) {
        v[static_cast<size_t>(2 * k)] = c[k].real();
        v[static_cast<size_t>(2 * k + 1)] = c[k].imag();
    }
    return v;
}

std::vector<double> realify_cluster(const Constellation& c) {
    if (c.m_h() != 2) throw InvalidSpec("central symmetry requires m_h == 2");
    const int nc = 1 << c.m_l();
    std::vector<cdouble> cluster(c.points().begin(), c.points().begin() + nc);
    const Constellation rebuilt = expand_central_symmetric(cluster, c.m_l());
    if (!approx_equal(rebuilt, c, 1e-9)) {
        throw InvalidSpec("constellation is not centrally symmetric");
    }
    std::vector<double> v(static_cast<size_t>(2 * nc));
    for (int i = 0; i < nc; ++i) {
        v[static_cast<size_t>(2 * i)] = cluster[static_cast<size_t>(i)].real();
        v[static_cast<size_t>(2 * i + 1)] = cluster[static_cast<size_t>(i)].imag();
    }
    return v;
}

Constellation complexify(std::span<const double> v, int m_h, int m_l, Symmetry symmetry) {
    if (symmetry == Symmetry::central) {
        if (m_h != 2) throw InvalidSpec("central symmetry requires m_h == 2");
        const size_t expected = size_t{2} << m_l;
        if (v.size() != expected) throw SizeMismatch("central layout needs 2^(m_l+1) reals");
        std::vector<cdouble> cluster(size_t{1} << m_l);
        for (size_t i = 0; i < cluster.size(); ++i) cluster[i] = {v[2 * i], v[2 * i + 1]};
        return expand_central_symmetric(cluster, m_l);
    }
    const size_t expected = size_t{2} << (m_h + m_l);
    if (v.size() != expected) throw SizeMismatch("full layout needs 2^(m+1) reals");
    std::vector<cdouble> pts(size_t{1} << (m_h + m_l));
    for (size_t k = 0; k < pts.size(); ++k) pts[k] = {v[2 * k], v[2 * k + 1]};
    return Constellation(m_h, m_l, std::move(pts));
}

ProblemEval eval_problem(std::span<const double> v, const ProblemSpec& spec,
                         const QuadratureSpec& q) {
    spec.validate();
    q.validate();
    const Param p = make_param(spec);
    if (static_cast<int>(v.size()) != p.dim) throw SizeMismatch("variable vector has wrong size");
    const VectorXd ve = Eigen::Map<const VectorXd>(v.data(), p.dim);
    const FVals fv = eval_fs(p, spec, q, ve, -1.0);  // true max for the PAPR term
    ProblemEval out;
    out.f0 = fv.f0;
    out.f.assign(fv.f.data(), fv.f.data() + fv.f.size());
    return out;
}

ProblemDerivs derivatives(std::span<const double> v, const ProblemSpec& spec,
                          const QuadratureSpec& q, const SolverConfig& cfg,
                          std::span<const double> lambda) {
    spec.validate();
    cfg.validate();
    q.validate();
    const Param p = make_param(spec);
    if (static_cast<int>(v.size()) != p.dim) throw SizeMismatch("variable vector has wrong size");
    const int k = spec.constraint_count();
    VectorXd lam = VectorXd::Zero(k);
    if (!lambda.empty()) {
        if (static_cast<int>(lambda.size()) != k) throw SizeMismatch("lambda has wrong size");
        lam = Eigen::Map<const VectorXd>(lambda.data(), k);
    }
    const VectorXd ve = Eigen::Map<const VectorXd>(v.data(), p.dim);
    const GradSet g = eval_grads(p, spec, q, ve, kPaprBeta0, cfg.fd_step);
    const FVals fv = eval_fs(p, spec, q, ve, kPaprBeta0);
    ProblemDerivs d;
    d.grad_f0 = g.g0;
    d.jac_f = g.jac;
    d.f = fv.f;
    d.hess_lagrangian = lagrangian_hessian(p, spec, MatrixXd::Identity(p.dim, p.dim), g, lam);
    return d;
}

NewtonStep ip_newton_step(const IpState& state, const ProblemDerivs& d, double pinv_threshold) {
    const int dim = static_cast<int>(d.grad_f0.size());
    const int k = static_cast<int>(d.f.size());
    if (state.lambda.size() != k) throw SizeMismatch("lambda size does not match constraints");
    for (int i = 0; i < k; ++i) {
        if (!(state.lambda(i) > 0.0)) throw InvalidSpec("lambda must be > 0 componentwise");
        if (!(d.f(i) < 0.0)) throw InvalidSpec("constraints must be strictly feasible");
    }

    MatrixXd m = MatrixXd::Zero(dim + k, dim + k);
    m.topLeftCorner(dim, dim) = d.hess_lagrangian;
    m.topRightCorner(dim, k) = d.jac_f.transpose();
    m.bottomLeftCorner(k, dim) = -(state.lambda.asDiagonal() * d.jac_f);
    m.bottomRightCorner(k, k) = MatrixXd((-d.f).asDiagonal());

    VectorXd rhs(dim + k);
    rhs.head(dim) = -(d.grad_f0 + d.jac_f.transpose() * state.lambda);
    rhs.tail(k) =
        (state.lambda.array() * d.f.array()).matrix() + VectorXd::Constant(k, 1.0 / state.mu);

    Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VectorXd& sv = svd.singularValues();
    const double smax = sv(0);
    const double cutoff = pinv_threshold * smax;
    NewtonStep step;
    step.used_pinv = !(smax > 0.0) || sv(sv.size() - 1) < cutoff;

    VectorXd sol;
    if (!(smax > 0.0)) {
        sol = VectorXd::Zero(dim + k);
    } else {
        VectorXd inv_sv(sv.size());
        for (int i = 0; i < sv.size(); ++i) inv_sv(i) = sv(i) >= cutoff ? 1.0 / sv(i) : 0.0;
        sol = svd.matrixV() * (inv_sv.asDiagonal() * (svd.matrixU().transpose() * rhs));
    }
    if (!sol.allFinite()) throw LinearSolveFailure("primal-dual step is not finite");
    step.dv = sol.head(dim);
    step.dlambda = sol.tail(k);
    return step;
}

std::vector<double> feasible_start(const ProblemSpec& spec, const QuadratureSpec& q,
                                   CounterRng& rng, int max_attempts) {
    spec.validate();
    q.validate();
    const Param p = make_param(spec);
    const VectorXd v = feasible_start_impl(p, spec, q, rng, max_attempts);
    return std::vector<double>(v.data(), v.data() + v.size());
}

SolveResult solve(const ProblemSpec& spec, const SolverConfig& cfg, const QuadratureSpec& q) {
    spec.validate();
    cfg.validate();
    q.validate();
    if (spec.m_l < 1) throw InvalidSpec("LP optimization needs m_l >= 1");
    const Param p = make_param(spec);

    std::vector<StartTask> tasks(static_cast<size_t>(cfg.starts));
    for (int s = 0; s < cfg.starts; ++s) {
        CounterRng rng(CounterRng::derive_seed(cfg.seed, static_cast<std::uint64_t>(s)));
        StartTask& t = tasks[static_cast<size_t>(s)];
        if (s == 0) {
            if (auto v = best_theta_seed(p, spec, q)) {
                t.have_v = true;
                t.v0 = *v;
                continue;
            }
        }
        try {
            t.v0 = feasible_start_impl(p, spec, q, rng, 60);
            t.have_v = true;
        } catch (const NoFeasibleStart&) {
            t.have_v = false;
        }
    }
    return run_multistart(p, spec, cfg, q, tasks).result;
}

std::pair<HqamParams, SolveResult> optimize_hqam(const ProblemSpec& spec, const SolverConfig& cfg,
                                                 const QuadratureSpec& q) {
    spec.validate();
    cfg.validate();
    q.validate();
    if (spec.m_h != 2 || (spec.m_l != 2 && spec.m_l != 3)) {
        throw UnsupportedOrder("H-QAM optimization requires m_h == 2, m_l in {2, 3}");
    }
    const Param p = make_hqam(spec.m_l);
    const ChannelSpec ch_h = ChannelSpec::from_snr_db(spec.snr_h_db, spec.power);
    const ChannelSpec ch_l = ChannelSpec::from_snr_db(spec.snr_l_db, spec.power);

    // deterministic angle seeds across the feasible arc
    std::vector<StartTask> tasks;
    const int want = std::clamp(cfg.starts, 4, 12);
    for (int i = 0; i < want; ++i) {
        const double theta = 0.015 + (1.5508 - 0.015) * i / (want - 1);
        VectorXd v(2);
        v << std::cos(theta), std::sin(theta);
        v *= std::sqrt(kStartPowerFraction * spec.power / p.power(v));
        if (spec.papr_limit) {
            const double smax = smooth_peak(p, v, kPaprBeta0, false).value;
            if (!(smax - *spec.papr_limit * p.power(v) < 0.0)) continue;
        }
        if (eval_rh(p, v, ch_h, q) <= spec.r_star + kFeasibilityMargin) continue;
        StartTask t;
        t.have_v = true;
        t.v0 = v;
        tasks.push_back(std::move(t));
    }
    if (tasks.empty()) {
        const Constellation qpsk_like = hqam({std::sqrt(spec.power / 2.0), 0.0, spec.m_l});
        const double best_r_h = rate_hp(qpsk_like, ch_h, q);
        throw Infeasible("no feasible H-QAM angle for r_star = " + std::to_string(spec.r_star) +
                             " (best full-power H-QAM r_H = " + std::to_string(best_r_h) + ")",
                         best_r_h);
    }

    MultistartOut out = run_multistart(p, spec, cfg, q, tasks);
    // Nonnegative scaling factors; sign flips are label complements with
    // identical rates, so fold them out and rebuild.
    HqamParams params{std::abs(out.v_final(0)), std::abs(out.v_final(1)), spec.m_l};
    Constellation rebuilt = hqam(params);
    SolveResult res{std::move(rebuilt),     0.0, 0.0, 0.0, 0.0,
                    out.result.kkt_residual, std::move(out.result.start_logs)};
    res.r_h_achieved = rate_hp(res.constellation, ch_h, q);
    res.r_l_achieved = rate_lp(res.constellation, ch_l, q);
    res.power_used = res.constellation.average_power();
    res.papr_used = res.constellation.papr();
    return {params, res};
}

}  // namespace hmdesign
