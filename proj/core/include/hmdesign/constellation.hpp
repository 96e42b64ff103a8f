#ifndef HMDESIGN_CONSTELLATION_HPP
#define HMDESIGN_CONSTELLATION_HPP

#include <complex>
#include <span>
#include <vector>

namespace hmdesign {

using cdouble = std::complex<double>;

// Labeled hierarchical constellation. Labeling is implicit natural order:
// the point at index l(b_H)*2^m_l + l(b_L) carries label (b_H, b_L), where
// l(.) is the decimal value of the bit vector and bit 1 is the most
// significant bit of each field. Immutable after construction.
class Constellation {
public:
    Constellation(int m_h, int m_l, std::vector<cdouble> points);

    int m_h() const { return m_h_; }
    int m_l() const { return m_l_; }
    int m() const { return m_h_ + m_l_; }
    int size() const { return static_cast<int>(points_.size()); }
    const std::vector<cdouble>& points() const { return points_; }
    const cdouble& operator[](int index) const { return points_[static_cast<size_t>(index)]; }

    double average_power() const;
    double peak_power() const;
    // max_k |z_k|^2 / average_power; >= 1, equality iff all moduli equal
    double papr() const;

    // Every point multiplied by rho (> 0). Power scales by rho^2, PAPR is
    // unchanged.
    Constellation scaled(double rho) const;
    // Scaled so that average_power() == target exactly.
    Constellation normalized_power(double target) const;

    // Label accessors; hp bit i in 1..m_h, lp bit j in 1..m_l.
    int hp_label(int index) const { return index >> m_l_; }
    int lp_label(int index) const { return index & ((1 << m_l_) - 1); }
    int hp_bit(int index, int i) const;
    int lp_bit(int index, int j) const;

private:
    int m_h_;
    int m_l_;
    std::vector<cdouble> points_;
};

// Constructs a constellation from points given in natural-order index
// sequence. No reordering is performed.
Constellation new_natural(int m_h, int m_l, std::vector<cdouble> points);

// Builds the 2^(m_l+2)-point centrally symmetric constellation
// (zc, -conj(zc), conj(zc), -zc) from one cluster; m_h is implied 2.
// The result has zero mean and the same average power as the cluster.
Constellation expand_central_symmetric(std::span<const cdouble> cluster, int m_l);

// H-QAM scaling pair: z(b_H, b_L) = d1*q(b_H) + d2*s(b_L) with Gray maps of
// the HP bits onto quadrants {+-1 +- j} and the LP bits onto a unit base
// sub-constellation. m_h is fixed at 2; m_l in {2, 3}.
struct HqamParams {
    double d1;
    double d2;
    int m_l;
};

// Default LP base layout: {+-1 +- j} for m_l = 2; for m_l = 3 a 4x2
// rectangle x in {+-1, +-3}, y in {+-1} with per-axis Gray labels.
std::vector<cdouble> hqam_base(int m_l);

Constellation hqam(const HqamParams& params);
// Same construction with a caller-supplied LP base (size 2^m_l, indexed by
// l(b_L)); hook for alternative base layouts.
Constellation hqam(const HqamParams& params, std::span<const cdouble> base);

// Indices of the 2^(m-1) points whose HP label bit i equals b. The two sets
// for b in {0,1} partition the index range.
std::vector<int> hp_bit_partition(const Constellation& c, int i, int b);

// Contiguous indices l(b_H)*2^m_l .. l(b_H)*2^m_l + 2^m_l - 1 of the LP
// sub-constellation selected by the HP label bits.
std::vector<int> lp_sub_constellation(const Constellation& c, std::span<const int> b_h);

// Coordinate-wise comparison at the library's test tolerance (1e-9 absolute).
bool approx_equal(const Constellation& a, const Constellation& b, double tol = 1e-9);

}  // namespace hmdesign

#endif
