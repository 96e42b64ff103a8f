#ifndef HMDESIGN_RATE_REGION_HPP
#define HMDESIGN_RATE_REGION_HPP

#include <optional>
#include <string>
#include <vector>

#include "hmdesign/optimizer.hpp"

namespace hmdesign {

enum class Scheme { hm_optimized, hqam_optimized, td_gaussian, hull };

const char* scheme_name(Scheme s);

struct FrontierPoint {
    double r_h = 0.0;
    double r_l = 0.0;
    double r_star = 0.0;  // threshold that produced the point (r_h target for TD)
    double power = 0.0;
    double papr = 0.0;  // NaN where PAPR is not meaningful (Gaussian signals)
};

struct RegionMeta {
    double snr_h_db = 0.0;
    double snr_l_db = 0.0;
    double power = 0.0;
    int m_h = 0;
    int m_l = 0;
    int grid = 0;
};

// Achievable (r_H, r_L) frontier for one scheme; r_h strictly increasing.
struct RegionFrontier {
    Scheme scheme = Scheme::td_gaussian;
    std::vector<FrontierPoint> points;
    RegionMeta meta;
    // thresholds skipped because the solver reported them infeasible
    std::vector<double> skipped_thresholds;
};

// Threshold grid used by the sweeps: count values evenly spaced over
// [0, 0.98 * r_H^max], with r_H^max the HP rate of the full-power d2 = 0
// H-QAM (all power in the HP layer).
std::vector<double> default_thresholds(const ProblemSpec& base, int count,
                                       const QuadratureSpec& q);

// One optimizer solve per threshold; infeasible thresholds are recorded and
// skipped, other per-point failures never abort the sweep.
RegionFrontier hm_frontier(const ProblemSpec& base, std::span<const double> thresholds,
                           const SolverConfig& cfg, const QuadratureSpec& q);
RegionFrontier hqam_frontier(const ProblemSpec& base, std::span<const double> thresholds,
                             const SolverConfig& cfg, const QuadratureSpec& q);

// Orthogonal time-division baseline with ideal Gaussian signalling and
// per-slot power control under the average-power constraint:
// r_H = a*log2(1 + p1/N_H), r_L = (1-a)*log2(1 + p2/N_L), a*p1+(1-a)*p2 <= p.
RegionFrontier td_frontier(double snr_h_db, double snr_l_db, double power, int grid_size);

// Upper-left convex hull of the union of frontier points plus the two axis
// endpoints; dominates every input pointwise.
RegionFrontier convex_hull(std::span<const RegionFrontier> frontiers);

// True iff r_l exceeds the frontier's piecewise-linear interpolation at r_h
// by more than margin. Left of the frontier span the answer is false; beyond
// the right endpoint the frontier achieves no LP rate.
bool dominates(double r_h, double r_l, const RegionFrontier& frontier, double margin);

// CSV with header scheme,r_star,r_h,r_l,power,papr at 9 significant digits.
std::string frontier_csv(const RegionFrontier& frontier);

}  // namespace hmdesign

#endif
