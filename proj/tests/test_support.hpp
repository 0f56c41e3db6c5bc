#pragma once

// Shared generators and independent reference evaluators for the test suites.
// The reference evaluators are literal, long-double transcriptions of the
// formulas and deliberately share no code with the library's kernels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "lorlut/image.hpp"
#include "lorlut/loss.hpp"
#include "lorlut/lowrank.hpp"
#include "lorlut/lut.hpp"

namespace lorlut::testing {

/// 64-bit LCG; tests/oracles/color_oracles.py implements the same sequence.
class Lcg {
public:
    explicit Lcg(std::uint64_t seed) : state_(seed) {}
    double unit() {
        state_ = state_ * 6364136223846793005ULL + 1442695040888963407ULL;
        return static_cast<double>(state_ >> 11) * (1.0 / 9007199254740992.0);
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
    int integer(int lo, int hi) { return lo + static_cast<int>(unit() * (hi - lo + 1)) % (hi - lo + 1); }

private:
    std::uint64_t state_;
};

inline ImageBuffer lcg_image(std::uint64_t seed, int w, int h) {
    Lcg g(seed);
    ImageBuffer img(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            Rgb& p = img.at(x, y);
            p.r = g.unit();
            p.g = g.unit();
            p.b = g.unit();
        }
    }
    return img;
}

inline Lut3D random_lut(Lcg& g, int grid, double lo = 0.0, double hi = 1.0) {
    Lut3D lut(grid);
    for (Rgb& e : lut.entries()) e = {g.uniform(lo, hi), g.uniform(lo, hi), g.uniform(lo, hi)};
    return lut;
}

inline CpFactors random_factors(Lcg& g, int grid, int rank, double scale = 1.0) {
    CpFactors f(grid, rank);
    for (int r = 0; r < rank; ++r) {
        CpComponent& c = f[r];
        for (auto* vec : {&c.u, &c.v, &c.w}) {
            for (double& x : *vec) x = g.uniform(-scale, scale);
        }
        for (double& x : c.c) x = g.uniform(-scale, scale);
    }
    return f;
}

inline LorLutModel random_model(Lcg& g, int grid, int bases, int rank, double factor_scale = 0.5) {
    LorLutModel m;
    m.grid_size = grid;
    for (int k = 0; k < bases; ++k) {
        m.bases.push_back(random_lut(g, grid));
        m.alphas.push_back(g.uniform(-0.5, 1.5));
    }
    m.factors = random_factors(g, grid, rank, factor_scale);
    return m;
}

using LRgb = long double[3];

/// Literal eight-term weighted vertex sum.
inline void oracle_trilinear(const Lut3D& lut, const Rgb& c, long double out[3]) {
    const int g = lut.grid_size();
    long double pos[3];
    int lo[3];
    for (int ax = 0; ax < 3; ++ax) {
        const long double x = std::clamp<long double>(c[ax], 0.0L, 1.0L) * (g - 1);
        lo[ax] = std::min(static_cast<int>(std::floor(x)), g - 2);
        pos[ax] = x - lo[ax];
    }
    out[0] = out[1] = out[2] = 0.0L;
    for (int a = 0; a <= 1; ++a) {
        for (int b = 0; b <= 1; ++b) {
            for (int d = 0; d <= 1; ++d) {
                const long double w = (a ? pos[0] : 1.0L - pos[0]) * (b ? pos[1] : 1.0L - pos[1]) *
                                      (d ? pos[2] : 1.0L - pos[2]);
                const Rgb& e = lut.at(lo[0] + a, lo[1] + b, lo[2] + d);
                for (int ch = 0; ch < 3; ++ch) out[ch] += w * e[ch];
            }
        }
    }
}

/// Four nested loops over (i, j, k, ch) and the rank.
inline long double oracle_residual_entry(const CpFactors& f, const std::vector<double>& s, int i, int j, int k,
                                         int ch) {
    long double acc = 0.0L;
    for (int r = 0; r < f.rank(); ++r) {
        const CpComponent& c = f[r];
        acc += static_cast<long double>(s[static_cast<std::size_t>(r)]) * c.c[static_cast<std::size_t>(ch)] *
               c.u[static_cast<std::size_t>(i)] * c.v[static_cast<std::size_t>(j)] * c.w[static_cast<std::size_t>(k)];
    }
    return acc;
}

/// Full objective (L1 + TV + residual l2) in long double, straight from the
/// definitions. The delta-E term is not covered.
inline long double oracle_loss(const ImageBuffer& input, const ImageBuffer& target, const LorLutModel& m,
                               const LossWeights& w) {
    const int g = m.grid_size;
    const std::size_t n = static_cast<std::size_t>(g) * g * g;
    std::vector<long double> lut(3 * n, 0.0L), res(3 * n, 0.0L);
    const std::vector<double> ones(static_cast<std::size_t>(m.rank()), 1.0);
    auto idx = [g](int i, int j, int k) { return static_cast<std::size_t>(i + g * (j + g * k)); };
    for (int k = 0; k < g; ++k) {
        for (int j = 0; j < g; ++j) {
            for (int i = 0; i < g; ++i) {
                for (int ch = 0; ch < 3; ++ch) {
                    long double base = 0.0L;
                    if (m.bases.empty()) {
                        base = static_cast<long double>(ch == 0 ? i : (ch == 1 ? j : k)) / (g - 1);
                    } else {
                        for (std::size_t b = 0; b < m.bases.size(); ++b) {
                            base += static_cast<long double>(m.alphas[b]) * m.bases[b].at(i, j, k)[ch];
                        }
                    }
                    const long double r = oracle_residual_entry(m.factors, ones, i, j, k, ch);
                    res[3 * idx(i, j, k) + ch] = r;
                    lut[3 * idx(i, j, k) + ch] = base + r;
                }
            }
        }
    }

    long double l1 = 0.0L;
    for (int y = 0; y < input.height(); ++y) {
        for (int x = 0; x < input.width(); ++x) {
            const Rgb& c = input.at(x, y);
            long double pos[3];
            int lo[3];
            for (int ax = 0; ax < 3; ++ax) {
                const long double t = std::clamp<long double>(c[ax], 0.0L, 1.0L) * (g - 1);
                lo[ax] = std::min(static_cast<int>(std::floor(t)), g - 2);
                pos[ax] = t - lo[ax];
            }
            for (int ch = 0; ch < 3; ++ch) {
                long double v = 0.0L;
                for (int a = 0; a <= 1; ++a) {
                    for (int b = 0; b <= 1; ++b) {
                        for (int d = 0; d <= 1; ++d) {
                            const long double wt = (a ? pos[0] : 1.0L - pos[0]) * (b ? pos[1] : 1.0L - pos[1]) *
                                                   (d ? pos[2] : 1.0L - pos[2]);
                            v += wt * lut[3 * idx(lo[0] + a, lo[1] + b, lo[2] + d) + ch];
                        }
                    }
                }
                l1 += std::fabs(v - target.at(x, y)[ch]);
            }
        }
    }
    l1 /= 3.0L * input.width() * input.height();

    long double tv = 0.0L;
    for (int k = 0; k < g; ++k) {
        for (int j = 0; j < g; ++j) {
            for (int i = 0; i < g; ++i) {
                for (int ch = 0; ch < 3; ++ch) {
                    const long double here = lut[3 * idx(i, j, k) + ch];
                    if (i + 1 < g) tv += std::pow(lut[3 * idx(i + 1, j, k) + ch] - here, 2);
                    if (j + 1 < g) tv += std::pow(lut[3 * idx(i, j + 1, k) + ch] - here, 2);
                    if (k + 1 < g) tv += std::pow(lut[3 * idx(i, j, k + 1) + ch] - here, 2);
                }
            }
        }
    }
    long double l2 = 0.0L;
    for (long double r : res) l2 += r * r;
    return w.reconstruction * l1 + w.smoothness * tv + w.residual * l2;
}

}  // namespace lorlut::testing
