#include "hmdesign/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hmdesign/errors.hpp"
#include "hmdesign/quadrature.hpp"
#include "hmdesign/rng.hpp"

namespace hmdesign {

namespace {

constexpr double kLn2 = 0.69314718055994530941723212145818;
constexpr double kPi = 3.1415926535897932384626433832795;
// floor for log arguments; subset sums can underflow when every member of a
// subset is hundreds of sigmas from the received point
constexpr double kLogFloor = 1e-300;

// Per-bit accumulation E[ln(S_b(y)/S_all(y))] for one block of points whose
// label equals the local index, at one transmitted symbol k. Shared by the
// quadrature and Monte-Carlo paths.
struct BlockScratch {
    std::vector<double> ex;      // exponent per point
    std::vector<double> sum0;    // partial sums for bit value 0, per bit
};

// Adds, for every bit position b in [0, nbits), ln(S_{bit of k}) - ln(S_all)
// evaluated at receive point y, into term[b].
inline void log_ratio_terms(std::span<const cdouble> pts, int nbits, int k, cdouble y,
                            double inv_2s2, BlockScratch& ws, double* term) {
    const int n = static_cast<int>(pts.size());
    double max_e = -1e300;
    for (int j = 0; j < n; ++j) {
        const double dx = y.real() - pts[static_cast<size_t>(j)].real();
        const double dy = y.imag() - pts[static_cast<size_t>(j)].imag();
        const double e = -(dx * dx + dy * dy) * inv_2s2;
        ws.ex[static_cast<size_t>(j)] = e;
        if (e > max_e) max_e = e;
    }
    double total = 0.0;
    for (int b = 0; b < nbits; ++b) ws.sum0[static_cast<size_t>(b)] = 0.0;
    for (int j = 0; j < n; ++j) {
        const double s = std::exp(ws.ex[static_cast<size_t>(j)] - max_e);
        total += s;
        for (int b = 0; b < nbits; ++b) {
            if (((j >> b) & 1) == 0) ws.sum0[static_cast<size_t>(b)] += s;
        }
    }
    const double ln_total = std::log(total);
    for (int b = 0; b < nbits; ++b) {
        const double sb =
            ((k >> b) & 1) == 0 ? ws.sum0[static_cast<size_t>(b)] : total - ws.sum0[static_cast<size_t>(b)];
        term[b] = std::log(std::max(sb, kLogFloor)) - ln_total;
    }
}

// Per-bit MI (bits, indexed by bit position from the LSB) for a point block
// whose labels are the local indices 0..2^nbits-1, via GH product quadrature.
std::vector<double> per_bit_mi_block(std::span<const cdouble> pts, int nbits, double sigma,
                                     int nodes) {
    const GhRule& gh = gh_rule(nodes);
    const int n = static_cast<int>(pts.size());
    const double s2 = sigma * std::sqrt(2.0);
    const double inv_2s2 = 1.0 / (2.0 * sigma * sigma);

    BlockScratch ws;
    ws.ex.resize(static_cast<size_t>(n));
    ws.sum0.resize(static_cast<size_t>(nbits));
    std::vector<double> acc(static_cast<size_t>(nbits), 0.0);
    double term[24];  // nbits is at most m <= 20

    for (int k = 0; k < n; ++k) {
        const cdouble zk = pts[static_cast<size_t>(k)];
        for (int u = 0; u < nodes; ++u) {
            const double wu = gh.weights[static_cast<size_t>(u)];
            const double nx = zk.real() + s2 * gh.nodes[static_cast<size_t>(u)];
            for (int v = 0; v < nodes; ++v) {
                const double w = wu * gh.weights[static_cast<size_t>(v)];
                const cdouble y(nx, zk.imag() + s2 * gh.nodes[static_cast<size_t>(v)]);
                log_ratio_terms(pts, nbits, k, y, inv_2s2, ws, term);
                for (int b = 0; b < nbits; ++b) acc[static_cast<size_t>(b)] += w * term[b];
            }
        }
    }
    const double scale = 1.0 / (static_cast<double>(n) * kLn2 * kPi);
    std::vector<double> mi(static_cast<size_t>(nbits));
    for (int b = 0; b < nbits; ++b) mi[static_cast<size_t>(b)] = 1.0 + acc[static_cast<size_t>(b)] * scale;
    return mi;
}

}  // namespace

ChannelSpec ChannelSpec::from_snr_db(double snr_db, double power_ref) {
    if (!(power_ref > 0.0)) throw InvalidSpec("power_ref must be > 0");
    ChannelSpec ch;
    ch.snr_db = snr_db;
    ch.power_ref = power_ref;
    ch.sigma = std::sqrt(power_ref / (2.0 * std::pow(10.0, snr_db / 10.0)));
    return ch;
}

double ChannelSpec::snr_linear() const { return std::pow(10.0, snr_db / 10.0); }

void QuadratureSpec::validate() const {
    if (nodes_per_dim < 4) throw InvalidSpec("nodes_per_dim must be >= 4");
    if (mc_samples < 1000) throw InvalidSpec("mc_samples must be >= 1000");
}

double transition_density(cdouble y, cdouble z, double sigma) {
    if (!(sigma > 0.0)) throw InvalidSpec("sigma must be > 0");
    const double d2 = std::norm(y - z);
    return std::exp(-d2 / (2.0 * sigma * sigma)) / (2.0 * kPi * sigma * sigma);
}

std::vector<double> per_bit_hp(const Constellation& c, const ChannelSpec& ch,
                               const QuadratureSpec& q) {
    q.validate();
    // full-set labels: HP bit i sits at bit position m_l + m_h - i
    std::vector<double> by_pos =
        per_bit_mi_block(c.points(), c.m(), ch.sigma, q.nodes_per_dim);
    std::vector<double> mi(static_cast<size_t>(c.m_h()));
    for (int i = 1; i <= c.m_h(); ++i) {
        mi[static_cast<size_t>(i - 1)] = by_pos[static_cast<size_t>(c.m_l() + c.m_h() - i)];
    }
    return mi;
}

std::vector<double> per_bit_lp(const Constellation& c, const ChannelSpec& ch,
                               const QuadratureSpec& q) {
    q.validate();
    if (c.m_l() == 0) throw NoLpBits("constellation has no LP bits");
    const int group_size = 1 << c.m_l();
    const int groups = 1 << c.m_h();
    std::vector<double> mi(static_cast<size_t>(c.m_l()), 0.0);
    for (int g = 0; g < groups; ++g) {
        std::span<const cdouble> sub(c.points().data() + static_cast<size_t>(g) * group_size,
                                     static_cast<size_t>(group_size));
        // local labels are l(b_L); LP bit j sits at bit position m_l - j
        std::vector<double> by_pos = per_bit_mi_block(sub, c.m_l(), ch.sigma, q.nodes_per_dim);
        for (int j = 1; j <= c.m_l(); ++j) {
            mi[static_cast<size_t>(j - 1)] += by_pos[static_cast<size_t>(c.m_l() - j)];
        }
    }
    for (double& v : mi) v /= static_cast<double>(groups);
    return mi;
}

double bit_mi_hp(const Constellation& c, const ChannelSpec& ch, int i, const QuadratureSpec& q) {
    if (i < 1 || i > c.m_h()) throw IndexOutOfRange("HP bit index out of range");
    return per_bit_hp(c, ch, q)[static_cast<size_t>(i - 1)];
}

double bit_mi_lp_cond(const Constellation& c, const ChannelSpec& ch, int j,
                      const QuadratureSpec& q) {
    if (j < 1 || j > c.m_l()) throw IndexOutOfRange("LP bit index out of range");
    return per_bit_lp(c, ch, q)[static_cast<size_t>(j - 1)];
}

double rate_hp(const Constellation& c, const ChannelSpec& ch, const QuadratureSpec& q) {
    const std::vector<double> mi = per_bit_hp(c, ch, q);
    double r = 0.0;
    for (double v : mi) r += v;
    return r;
}

double rate_lp(const Constellation& c, const ChannelSpec& ch, const QuadratureSpec& q) {
    const std::vector<double> mi = per_bit_lp(c, ch, q);
    double r = 0.0;
    for (double v : mi) r += v;
    return r;
}

double joint_mi(const Constellation& c, const ChannelSpec& ch, const QuadratureSpec& q) {
    q.validate();
    const GhRule& gh = gh_rule(q.nodes_per_dim);
    const int n = c.size();
    const double s2 = ch.sigma * std::sqrt(2.0);
    const double inv_2s2 = 1.0 / (2.0 * ch.sigma * ch.sigma);
    std::vector<double> ex(static_cast<size_t>(n));
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
        const cdouble zk = c[k];
        for (int u = 0; u < q.nodes_per_dim; ++u) {
            const double wu = gh.weights[static_cast<size_t>(u)];
            const double nx = zk.real() + s2 * gh.nodes[static_cast<size_t>(u)];
            for (int v = 0; v < q.nodes_per_dim; ++v) {
                const double w = wu * gh.weights[static_cast<size_t>(v)];
                const cdouble y(nx, zk.imag() + s2 * gh.nodes[static_cast<size_t>(v)]);
                double max_e = -1e300;
                for (int j = 0; j < n; ++j) {
                    const double e = -std::norm(y - c[j]) * inv_2s2;
                    ex[static_cast<size_t>(j)] = e;
                    if (e > max_e) max_e = e;
                }
                double total = 0.0;
                for (int j = 0; j < n; ++j) total += std::exp(ex[static_cast<size_t>(j)] - max_e);
                const double ek = ex[static_cast<size_t>(k)] - max_e;
                acc += w * (std::log(total) - ek);
            }
        }
    }
    const double avg = acc / (static_cast<double>(n) * kPi * kLn2);
    return static_cast<double>(c.m()) - avg;
}

McEstimate mc_bit_mi(const Constellation& c, const ChannelSpec& ch, Layer layer, int bit,
                     int samples, std::uint64_t seed) {
    if (samples < 1000) throw InvalidSpec("mc samples must be >= 1000");
    const int n = c.size();
    const int group_size = 1 << c.m_l();

    int bitpos = 0;
    if (layer == Layer::hp) {
        if (bit < 1 || bit > c.m_h()) throw IndexOutOfRange("HP bit index out of range");
        bitpos = c.m_l() + c.m_h() - bit;
    } else {
        if (c.m_l() == 0) throw NoLpBits("constellation has no LP bits");
        if (bit < 1 || bit > c.m_l()) throw IndexOutOfRange("LP bit index out of range");
        bitpos = c.m_l() - bit;
    }

    CounterRng rng(seed);
    BlockScratch ws;
    ws.ex.resize(static_cast<size_t>(n));
    ws.sum0.resize(1);
    const double inv_2s2 = 1.0 / (2.0 * ch.sigma * ch.sigma);

    double mean = 0.0;
    double m2 = 0.0;
    for (int s = 0; s < samples; ++s) {
        const int k = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n));
        const cdouble noise = ch.sigma * rng.next_cnormal();
        const cdouble y = c[k] + noise;

        double term = 0.0;
        if (layer == Layer::hp) {
            // numerator over the half with the transmitted bit value,
            // denominator over everything
            double max_e = -1e300;
            for (int j = 0; j < n; ++j) {
                const double e = -std::norm(y - c[j]) * inv_2s2;
                ws.ex[static_cast<size_t>(j)] = e;
                if (e > max_e) max_e = e;
            }
            double total = 0.0;
            double same = 0.0;
            const int kb = (k >> bitpos) & 1;
            for (int j = 0; j < n; ++j) {
                const double sj = std::exp(ws.ex[static_cast<size_t>(j)] - max_e);
                total += sj;
                if (((j >> bitpos) & 1) == kb) same += sj;
            }
            term = std::log(std::max(same, kLogFloor)) - std::log(total);
        } else {
            // conditioned on the HP label: sums run over the transmitted
            // symbol's own group only
            const int g = k / group_size;
            const int klocal = k % group_size;
            double max_e = -1e300;
            for (int j = 0; j < group_size; ++j) {
                const double e = -std::norm(y - c[g * group_size + j]) * inv_2s2;
                ws.ex[static_cast<size_t>(j)] = e;
                if (e > max_e) max_e = e;
            }
            double total = 0.0;
            double same = 0.0;
            const int kb = (klocal >> bitpos) & 1;
            for (int j = 0; j < group_size; ++j) {
                const double sj = std::exp(ws.ex[static_cast<size_t>(j)] - max_e);
                total += sj;
                if (((j >> bitpos) & 1) == kb) same += sj;
            }
            term = std::log(std::max(same, kLogFloor)) - std::log(total);
        }

        const double value = 1.0 + term / kLn2;
        const double delta = value - mean;
        mean += delta / static_cast<double>(s + 1);
        m2 += delta * (value - mean);
    }
    McEstimate est;
    est.value = mean;
    const double var = m2 / static_cast<double>(samples - 1);
    est.std_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(samples));
    return est;
}

}  // namespace hmdesign
