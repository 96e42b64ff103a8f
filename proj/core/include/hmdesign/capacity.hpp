#ifndef HMDESIGN_CAPACITY_HPP
#define HMDESIGN_CAPACITY_HPP

#include <cstdint>
#include <vector>

#include "hmdesign/constellation.hpp"

namespace hmdesign {

// AWGN channel at a receiver SNR. The noise is circular with per-real-
// dimension variance sigma^2 = power_ref / (2 * 10^(snr_db/10)), so the
// total complex noise power is power_ref / snr_linear.
struct ChannelSpec {
    double snr_db = 0.0;
    double power_ref = 1.0;
    double sigma = 0.0;

    static ChannelSpec from_snr_db(double snr_db, double power_ref = 1.0);
    double snr_linear() const;
};

// Numerical settings: Gauss-Hermite nodes per real dimension for the
// deterministic rates, and sample count / seed for the Monte-Carlo oracle.
struct QuadratureSpec {
    int nodes_per_dim = 24;
    int mc_samples = 200000;
    std::uint64_t seed = 1;

    void validate() const;  // nodes_per_dim >= 4, mc_samples >= 1000
};

// Bivariate Gaussian transition density with per-dimension variance sigma^2.
double transition_density(cdouble y, cdouble z, double sigma);

// Per-bit mutual informations in bits, each in [0, 1], by Gauss-Hermite
// product quadrature over the noise (nodes scaled by sigma*sqrt(2) per
// dimension). LP values are conditioned on the HP label (SIC receiver):
// the uniform average over HP groups of the per-sub-constellation bit MI.
double bit_mi_hp(const Constellation& c, const ChannelSpec& ch, int i, const QuadratureSpec& q);
double bit_mi_lp_cond(const Constellation& c, const ChannelSpec& ch, int j,
                      const QuadratureSpec& q);
std::vector<double> per_bit_hp(const Constellation& c, const ChannelSpec& ch,
                               const QuadratureSpec& q);
std::vector<double> per_bit_lp(const Constellation& c, const ChannelSpec& ch,
                               const QuadratureSpec& q);

// Layer rates: r_H = sum_i I(B_H^i; Y_H), r_L = sum_j I(B_L^j; Y_L | B_H).
double rate_hp(const Constellation& c, const ChannelSpec& ch, const QuadratureSpec& q);
double rate_lp(const Constellation& c, const ChannelSpec& ch, const QuadratureSpec& q);

// Symbol-wise I(Z; Y) for uniform symbols; used for bound checks.
double joint_mi(const Constellation& c, const ChannelSpec& ch, const QuadratureSpec& q);

enum class Layer { hp, lp };

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

// Monte-Carlo estimate of the same expectation the quadrature computes,
// with its standard error. Bit-identical for a fixed seed.
McEstimate mc_bit_mi(const Constellation& c, const ChannelSpec& ch, Layer layer, int bit,
                     int samples, std::uint64_t seed);

}  // namespace hmdesign

#endif
