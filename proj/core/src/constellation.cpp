#include "hmdesign/constellation.hpp"

#include <cmath>
#include <string>

#include "hmdesign/errors.hpp"

namespace hmdesign {

namespace {

bool finite(cdouble z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace

Constellation::Constellation(int m_h, int m_l, std::vector<cdouble> points)
    : m_h_(m_h), m_l_(m_l), points_(std::move(points)) {
    if (m_h_ < 1) throw InvalidSpec("m_h must be >= 1");
    if (m_l_ < 0) throw InvalidSpec("m_l must be >= 0");
    if (m_h_ + m_l_ > 20) throw InvalidSpec("constellation order too large");
    const size_t expected = size_t{1} << (m_h_ + m_l_);
    if (points_.size() != expected) {
        throw SizeMismatch("expected " + std::to_string(expected) + " points, got " +
                           std::to_string(points_.size()));
    }
    for (const cdouble& z : points_) {
        if (!finite(z)) throw NonFinite("constellation coordinate is NaN or Inf");
    }
}

double Constellation::average_power() const {
    double sum = 0.0;
    for (const cdouble& z : points_) sum += std::norm(z);
    return sum / static_cast<double>(points_.size());
}

double Constellation::peak_power() const {
    double peak = 0.0;
    for (const cdouble& z : points_) peak = std::max(peak, std::norm(z));
    return peak;
}

double Constellation::papr() const {
    const double avg = average_power();
    if (avg <= 0.0) throw ZeroPower("PAPR undefined: all points at the origin");
    return peak_power() / avg;
}

Constellation Constellation::scaled(double rho) const {
    if (!(rho > 0.0)) throw NonPositiveScale("scale factor must be > 0");
    std::vector<cdouble> p(points_);
    for (cdouble& z : p) z *= rho;
    return Constellation(m_h_, m_l_, std::move(p));
}

Constellation Constellation::normalized_power(double target) const {
    if (!(target > 0.0)) throw NonPositiveScale("target power must be > 0");
    const double avg = average_power();
    if (avg <= 0.0) throw ZeroPower("cannot normalize an all-origin constellation");
    return scaled(std::sqrt(target / avg));
}

int Constellation::hp_bit(int index, int i) const {
    if (i < 1 || i > m_h_) throw IndexOutOfRange("HP bit index out of range");
    return (index >> (m_l_ + m_h_ - i)) & 1;
}

int Constellation::lp_bit(int index, int j) const {
    if (j < 1 || j > m_l_) throw IndexOutOfRange("LP bit index out of range");
    return (index >> (m_l_ - j)) & 1;
}

Constellation new_natural(int m_h, int m_l, std::vector<cdouble> points) {
    return Constellation(m_h, m_l, std::move(points));
}

Constellation expand_central_symmetric(std::span<const cdouble> cluster, int m_l) {
    if (m_l < 0 || cluster.size() != (size_t{1} << m_l)) {
        throw SizeMismatch("cluster size must be 2^m_l");
    }
    std::vector<cdouble> pts;
    pts.reserve(cluster.size() * 4);
    for (const cdouble& z : cluster) pts.push_back(z);
    for (const cdouble& z : cluster) pts.push_back(-std::conj(z));
    for (const cdouble& z : cluster) pts.push_back(std::conj(z));
    for (const cdouble& z : cluster) pts.push_back(-z);
    return Constellation(2, m_l, std::move(pts));
}

std::vector<cdouble> hqam_base(int m_l) {
    if (m_l == 2) {
        // 2-bit Gray over quadrants: label (b1 b2) -> ((1-2 b1) + j (1-2 b2))
        std::vector<cdouble> base(4);
        for (int t = 0; t < 4; ++t) {
            base[static_cast<size_t>(t)] = {1.0 - 2.0 * ((t >> 1) & 1), 1.0 - 2.0 * (t & 1)};
        }
        return base;
    }
    if (m_l == 3) {
        // 4x2 rectangle, Gray per axis: (b1 b2) -> x via 00:+3 01:+1 11:-1 10:-3,
        // b3 -> y via 0:+1 1:-1
        static constexpr double gray4[4] = {3.0, 1.0, -1.0, -3.0};  // index (b1<<1)|b2 after Gray decode
        std::vector<cdouble> base(8);
        for (int t = 0; t < 8; ++t) {
            const int b1 = (t >> 2) & 1;
            const int b2 = (t >> 1) & 1;
            const int b3 = t & 1;
            const int gray_rank = (b1 << 1) | (b1 ^ b2);  // 00->0, 01->1, 11->2, 10->3
            base[static_cast<size_t>(t)] = {gray4[gray_rank], 1.0 - 2.0 * b3};
        }
        return base;
    }
    throw UnsupportedOrder("H-QAM supports m_l in {2, 3}");
}

Constellation hqam(const HqamParams& params, std::span<const cdouble> base) {
    if (!(params.d1 > 0.0)) throw InvalidSpec("H-QAM requires d1 > 0");
    if (!(params.d2 >= 0.0)) throw InvalidSpec("H-QAM requires d2 >= 0");
    if (params.m_l != 2 && params.m_l != 3) throw UnsupportedOrder("H-QAM supports m_l in {2, 3}");
    if (base.size() != (size_t{1} << params.m_l)) throw SizeMismatch("base size must be 2^m_l");
    const int groups = 4;
    const int group_size = 1 << params.m_l;
    std::vector<cdouble> pts(static_cast<size_t>(groups * group_size));
    for (int bh = 0; bh < groups; ++bh) {
        const cdouble q{1.0 - 2.0 * ((bh >> 1) & 1), 1.0 - 2.0 * (bh & 1)};
        for (int bl = 0; bl < group_size; ++bl) {
            pts[static_cast<size_t>(bh * group_size + bl)] =
                params.d1 * q + params.d2 * base[static_cast<size_t>(bl)];
        }
    }
    return Constellation(2, params.m_l, std::move(pts));
}

Constellation hqam(const HqamParams& params) {
    const std::vector<cdouble> base = hqam_base(params.m_l);
    return hqam(params, base);
}

std::vector<int> hp_bit_partition(const Constellation& c, int i, int b) {
    if (i < 1 || i > c.m_h()) throw IndexOutOfRange("HP bit index out of range");
    if (b != 0 && b != 1) throw IndexOutOfRange("bit value must be 0 or 1");
    std::vector<int> indices;
    indices.reserve(static_cast<size_t>(c.size() / 2));
    for (int k = 0; k < c.size(); ++k) {
        if (c.hp_bit(k, i) == b) indices.push_back(k);
    }
    return indices;
}

std::vector<int> lp_sub_constellation(const Constellation& c, std::span<const int> b_h) {
    if (b_h.size() != static_cast<size_t>(c.m_h())) {
        throw SizeMismatch("HP label must have m_h bits");
    }
    int value = 0;
    for (int bit : b_h) {
        if (bit != 0 && bit != 1) throw InvalidSpec("HP label bits must be 0 or 1");
        value = (value << 1) | bit;
    }
    const int group_size = 1 << c.m_l();
    std::vector<int> indices(static_cast<size_t>(group_size));
    for (int t = 0; t < group_size; ++t) indices[static_cast<size_t>(t)] = value * group_size + t;
    return indices;
}

bool approx_equal(const Constellation& a, const Constellation& b, double tol) {
    if (a.m_h() != b.m_h() || a.m_l() != b.m_l() || a.size() != b.size()) return false;
    for (int k = 0; k < a.size(); ++k) {
        if (std::abs(a[k].real() - b[k].real()) > tol) return false;
        if (std::abs(a[k].imag() - b[k].imag()) > tol) return false;
    }
    return true;
}

}  // namespace hmdesign
