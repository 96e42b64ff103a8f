#ifndef HMDESIGN_COVERAGE_HPP
#define HMDESIGN_COVERAGE_HPP

namespace hmdesign {

// Link budget: path loss pl_a + pl_b*log10(r_km) plus log-normal shadowing
// with standard deviation shadow_sigma_db, users uniform on a disc of
// radius_km.
struct CoverageParams {
    double ps_dbm = 66.0;
    double pn_dbm = -95.0;
    double radius_km = 4.0;
    double shadow_sigma_db = 8.0;
    double pl_a = 130.19;
    double pl_b = 37.6;

    void validate() const;
};

// Deterministic part of the path loss in dB.
double pathloss_db(double r_km, const CoverageParams& params);

// P(SNR_dB >= s_db) over user position and shadowing; monotone
// non-increasing in s_db. Composite-Simpson radial quadrature.
double snr_exceed_prob(double s_db, const CoverageParams& params);

// Lowest SNR in dB exceeded by the given fraction of users, by bisection to
// 1e-3 dB.
double snr_at_coverage(double fraction, const CoverageParams& params);

}  // namespace hmdesign

#endif
