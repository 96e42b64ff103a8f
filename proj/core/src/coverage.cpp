#include "hmdesign/coverage.hpp"

#include <cmath>

#include "hmdesign/errors.hpp"

namespace hmdesign {

namespace {

constexpr int kRadialSegments = 4000;  // composite Simpson resolution

double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.70710678118654752440084436210485); }

}  // namespace

void CoverageParams::validate() const {
    if (!(radius_km > 0.0)) throw InvalidSpec("radius_km must be > 0");
    if (!(shadow_sigma_db > 0.0)) throw InvalidSpec("shadow_sigma_db must be > 0");
}

double pathloss_db(double r_km, const CoverageParams& params) {
    if (!(r_km > 0.0)) throw InvalidSpec("distance must be > 0");
    return params.pl_a + params.pl_b * std::log10(r_km);
}

double snr_exceed_prob(double s_db, const CoverageParams& params) {
    params.validate();
    // P(SNR >= s | r) = Phi((p_s - p_n - L(r) - s) / sigma), averaged over
    // the radial density 2r/rhat^2. The integrand vanishes at r = 0, so the
    // log10 singularity is harmless; start the grid one ulp away from 0.
    const double rhat = params.radius_km;
    const double h = rhat / kRadialSegments;
    auto integrand = [&](double r) -> double {
        if (r <= 0.0) return 0.0;
        const double margin = params.ps_dbm - params.pn_dbm - pathloss_db(r, params) - s_db;
        return (2.0 * r / (rhat * rhat)) * normal_cdf(margin / params.shadow_sigma_db);
    };
    double sum = integrand(0.0) + integrand(rhat);
    for (int i = 1; i < kRadialSegments; ++i) {
        sum += integrand(i * h) * ((i % 2 == 1) ? 4.0 : 2.0);
    }
    const double p = sum * h / 3.0;
    return std::min(1.0, std::max(0.0, p));
}

double snr_at_coverage(double fraction, const CoverageParams& params) {
    params.validate();
    if (!(fraction > 0.0 && fraction < 1.0)) throw InvalidSpec("fraction must be in (0, 1)");
    double lo = -120.0;
    double hi = 150.0;
    if (snr_exceed_prob(lo, params) < fraction || snr_exceed_prob(hi, params) > fraction) {
        throw NotBracketed("coverage fraction not bracketed by the SNR search range");
    }
    // exceed-probability is non-increasing in s: keep lo on the >= side
    while (hi - lo > 1e-3) {
        const double mid = 0.5 * (lo + hi);
        if (snr_exceed_prob(mid, params) >= fraction) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace hmdesign
