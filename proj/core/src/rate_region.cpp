#include "hmdesign/rate_region.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "hmdesign/errors.hpp"

namespace hmdesign {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double log2p1(double x) { return std::log2(1.0 + x); }

// Best TD r_L for an exact r_H target: for each time share a the HP slot
// power is pinned by the target, the LP slot gets the remainder.
double td_rl_at_target(double target_rh, double snr_h_lin, double snr_l_lin, double power,
                       int grid_size) {
    if (target_rh <= 0.0) return log2p1(snr_l_lin);
    const double n_h = power / snr_h_lin;
    const double n_l = power / snr_l_lin;
    auto rl_of = [&](double a) -> double {
        if (a <= 0.0 || a >= 1.0) return a >= 1.0 ? 0.0 : -1.0;
        const double p1 = n_h * (std::exp2(target_rh / a) - 1.0);
        if (!(p1 >= 0.0) || a * p1 > power) return -1.0;
        const double p2 = (power - a * p1) / (1.0 - a);
        return (1.0 - a) * log2p1(p2 / n_l);
    };
    // coarse scan then golden-section polish
    double best_a = -1.0;
    double best = -1.0;
    const int scan = std::max(64, grid_size);
    for (int i = 1; i <= scan; ++i) {
        const double a = static_cast<double>(i) / (scan + 1);
        const double r = rl_of(a);
        if (r > best) {
            best = r;
            best_a = a;
        }
    }
    if (best < 0.0) return -1.0;
    double lo = std::max(1e-9, best_a - 1.0 / (scan + 1));
    double hi = std::min(1.0 - 1e-9, best_a + 1.0 / (scan + 1));
    const double gr = 0.61803398874989484820458683436564;
    double x1 = hi - gr * (hi - lo);
    double x2 = lo + gr * (hi - lo);
    double f1 = rl_of(x1);
    double f2 = rl_of(x2);
    for (int it = 0; it < 80; ++it) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = rl_of(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = rl_of(x1);
        }
    }
    return std::max(best, std::max(f1, f2));
}

RegionFrontier sweep_frontier(Scheme scheme, const ProblemSpec& base,
                              std::span<const double> thresholds, const SolverConfig& cfg,
                              const QuadratureSpec& q) {
    RegionFrontier out;
    out.scheme = scheme;
    out.meta = {base.snr_h_db, base.snr_l_db, base.power,
                base.m_h,      base.m_l,      static_cast<int>(thresholds.size())};
    for (double r_star : thresholds) {
        ProblemSpec spec = base;
        spec.r_star = r_star;
        try {
            SolveResult res = scheme == Scheme::hqam_optimized
                                  ? optimize_hqam(spec, cfg, q).second
                                  : solve(spec, cfg, q);
            out.points.push_back(
                {res.r_h_achieved, res.r_l_achieved, r_star, res.power_used, res.papr_used});
        } catch (const Error&) {
            out.skipped_thresholds.push_back(r_star);
        }
    }
    std::sort(out.points.begin(), out.points.end(),
              [](const FrontierPoint& a, const FrontierPoint& b) { return a.r_h < b.r_h; });
    // keep r_h strictly increasing: among coincident abscissae keep the best r_l
    std::vector<FrontierPoint> pruned;
    for (const FrontierPoint& pt : out.points) {
        if (!pruned.empty() && pt.r_h <= pruned.back().r_h + 1e-12) {
            if (pt.r_l > pruned.back().r_l) pruned.back() = pt;
        } else {
            pruned.push_back(pt);
        }
    }
    out.points = std::move(pruned);
    return out;
}

}  // namespace

const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::hm_optimized:
            return "hm";
        case Scheme::hqam_optimized:
            return "hqam";
        case Scheme::td_gaussian:
            return "td";
        case Scheme::hull:
            return "hull";
    }
    return "unknown";
}

std::vector<double> default_thresholds(const ProblemSpec& base, int count,
                                       const QuadratureSpec& q) {
    if (count < 1) throw InvalidSpec("threshold count must be >= 1");
    const ChannelSpec ch_h = ChannelSpec::from_snr_db(base.snr_h_db, base.power);
    double r_h_max = 0.0;
    if (base.m_h == 2) {
        const Constellation all_hp = hqam({std::sqrt(base.power / 2.0), 0.0,
                                           (base.m_l == 2 || base.m_l == 3) ? base.m_l : 2});
        r_h_max = rate_hp(all_hp, ch_h, q);
    } else {
        // generic fallback: Gaussian capacity bound scaled by the BICM loss
        // is unavailable here, use log2(1+snr) capped at m_h
        r_h_max = std::min(static_cast<double>(base.m_h), std::log2(1.0 + ch_h.snr_linear()));
    }
    std::vector<double> grid(static_cast<size_t>(count));
    const double top = 0.98 * r_h_max;
    for (int i = 0; i < count; ++i) {
        grid[static_cast<size_t>(i)] = count == 1 ? 0.0 : top * i / (count - 1);
    }
    return grid;
}

RegionFrontier hm_frontier(const ProblemSpec& base, std::span<const double> thresholds,
                           const SolverConfig& cfg, const QuadratureSpec& q) {
    return sweep_frontier(Scheme::hm_optimized, base, thresholds, cfg, q);
}

RegionFrontier hqam_frontier(const ProblemSpec& base, std::span<const double> thresholds,
                             const SolverConfig& cfg, const QuadratureSpec& q) {
    return sweep_frontier(Scheme::hqam_optimized, base, thresholds, cfg, q);
}

RegionFrontier td_frontier(double snr_h_db, double snr_l_db, double power, int grid_size) {
    if (grid_size < 2) throw InvalidSpec("grid_size must be >= 2");
    if (!(power > 0.0)) throw InvalidSpec("power must be > 0");
    const double snr_h_lin = std::pow(10.0, snr_h_db / 10.0);
    const double snr_l_lin = std::pow(10.0, snr_l_db / 10.0);
    const double rh_max = log2p1(snr_h_lin);

    RegionFrontier out;
    out.scheme = Scheme::td_gaussian;
    out.meta = {snr_h_db, snr_l_db, power, 0, 0, grid_size};
    for (int i = 0; i < grid_size; ++i) {
        const double target = rh_max * i / (grid_size - 1);
        const double rl = td_rl_at_target(target, snr_h_lin, snr_l_lin, power, 512);
        if (rl < 0.0) continue;
        out.points.push_back({target, rl, target, power, kNan});
    }
    return out;
}

RegionFrontier convex_hull(std::span<const RegionFrontier> frontiers) {
    if (frontiers.empty()) throw EmptyInput("convex_hull needs at least one frontier");
    std::vector<FrontierPoint> pts;
    double max_rh = 0.0;
    double max_rl = 0.0;
    for (const RegionFrontier& fr : frontiers) {
        for (const FrontierPoint& pt : fr.points) {
            pts.push_back(pt);
            max_rh = std::max(max_rh, pt.r_h);
            max_rl = std::max(max_rl, pt.r_l);
        }
    }
    if (pts.empty()) throw EmptyInput("convex_hull needs at least one point");
    pts.push_back({max_rh, 0.0, kNan, frontiers[0].meta.power, kNan});
    pts.push_back({0.0, max_rl, kNan, frontiers[0].meta.power, kNan});

    std::sort(pts.begin(), pts.end(), [](const FrontierPoint& a, const FrontierPoint& b) {
        return a.r_h != b.r_h ? a.r_h < b.r_h : a.r_l > b.r_l;
    });
    // upper envelope, Andrew monotone chain
    std::vector<FrontierPoint> hull;
    auto cross = [](const FrontierPoint& o, const FrontierPoint& a, const FrontierPoint& b) {
        return (a.r_h - o.r_h) * (b.r_l - o.r_l) - (a.r_l - o.r_l) * (b.r_h - o.r_h);
    };
    for (const FrontierPoint& pt : pts) {
        if (!hull.empty() && pt.r_h <= hull.back().r_h + 1e-15 && pt.r_l <= hull.back().r_l) {
            continue;  // duplicate abscissa, dominated
        }
        while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), pt) >= 0.0) {
            hull.pop_back();
        }
        hull.push_back(pt);
    }
    RegionFrontier out;
    out.scheme = Scheme::hull;
    out.meta = frontiers[0].meta;
    out.points = std::move(hull);
    return out;
}

bool dominates(double r_h, double r_l, const RegionFrontier& frontier, double margin) {
    if (frontier.points.empty()) return r_l > margin;
    const auto& pts = frontier.points;
    if (r_h < pts.front().r_h) return false;
    if (r_h > pts.back().r_h) return r_l > margin;  // frontier achieves nothing out there
    for (size_t i = 1; i < pts.size(); ++i) {
        if (r_h <= pts[i].r_h) {
            const double span = pts[i].r_h - pts[i - 1].r_h;
            const double t = span > 0.0 ? (r_h - pts[i - 1].r_h) / span : 0.0;
            const double fr_rl = pts[i - 1].r_l + t * (pts[i].r_l - pts[i - 1].r_l);
            return r_l > fr_rl + margin;
        }
    }
    return r_l > pts.back().r_l + margin;
}

std::string frontier_csv(const RegionFrontier& frontier) {
    std::string out = "scheme,r_star,r_h,r_l,power,papr\n";
    char line[256];
    for (const FrontierPoint& pt : frontier.points) {
        std::snprintf(line, sizeof(line), "%s,%.9g,%.9g,%.9g,%.9g,%.9g\n", scheme_name(frontier.scheme),
                      pt.r_star, pt.r_h, pt.r_l, pt.power, pt.papr);
        out += line;
    }
    return out;
}

}  // namespace hmdesign
