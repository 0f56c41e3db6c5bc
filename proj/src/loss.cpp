#include "lorlut/loss.hpp"

#include <cmath>
#include <string>

#include "lorlut/metrics.hpp"

namespace lorlut {

void LossWeights::validate() const {
    for (double v : {reconstruction, perceptual, delta_e, smoothness, residual}) {
        if (!std::isfinite(v) || v < 0.0) throw RangeError("loss weights must be finite and non-negative");
    }
    if (perceptual != 0.0) throw RangeError("perceptual loss weight must be 0 (LPIPS is not available)");
}

double tv_loss(const Lut3D& lut) {
    const int g = lut.grid_size();
    double sum = 0.0;
    for (int k = 0; k < g; ++k) {
        for (int j = 0; j < g; ++j) {
            for (int i = 0; i < g; ++i) {
                const Rgb& e = lut.at(i, j, k);
                if (i + 1 < g) {
                    const Rgb d = lut.at(i + 1, j, k) - e;
                    sum += d.r * d.r + d.g * d.g + d.b * d.b;
                }
                if (j + 1 < g) {
                    const Rgb d = lut.at(i, j + 1, k) - e;
                    sum += d.r * d.r + d.g * d.g + d.b * d.b;
                }
                if (k + 1 < g) {
                    const Rgb d = lut.at(i, j, k + 1) - e;
                    sum += d.r * d.r + d.g * d.g + d.b * d.b;
                }
            }
        }
    }
    return sum;
}

void accumulate_tv_gradient(const Lut3D& lut, double scale, Lut3D& grad) {
    if (grad.grid_size() != lut.grid_size()) throw DimensionError("TV gradient buffer has the wrong grid size");
    const int g = lut.grid_size();
    for (int k = 0; k < g; ++k) {
        for (int j = 0; j < g; ++j) {
            for (int i = 0; i < g; ++i) {
                const Rgb& e = lut.at(i, j, k);
                const int next[3][3] = {{i + 1, j, k}, {i, j + 1, k}, {i, j, k + 1}};
                for (const auto& n : next) {
                    if (n[0] >= g || n[1] >= g || n[2] >= g) continue;
                    // d/de (n - e)^2 = -2(n - e), d/dn = +2(n - e)
                    const Rgb d = (2.0 * scale) * (lut.at(n[0], n[1], n[2]) - e);
                    grad.at(i, j, k) = grad.at(i, j, k) - d;
                    grad.at(n[0], n[1], n[2]) += d;
                }
            }
        }
    }
}

double l2_residual(const Lut3D& residual) {
    double sum = 0.0;
    for (const Rgb& e : residual.entries()) sum += e.r * e.r + e.g * e.g + e.b * e.b;
    return sum;
}

LossBreakdown loss_total(const ImageBuffer& pred, const ImageBuffer& target, const Lut3D& lut,
                         const Lut3D& residual, const LossWeights& w) {
    w.validate();
    require_same_shape(pred, target, "loss_total");
    if (pred.empty()) throw RangeError("loss_total: empty image");

    LossBreakdown out;
    const auto p = pred.pixels();
    const auto t = target.pixels();
    double abs_sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        abs_sum += std::abs(p[i].r - t[i].r) + std::abs(p[i].g - t[i].g) + std::abs(p[i].b - t[i].b);
    }
    out.l1 = abs_sum / (3.0 * static_cast<double>(p.size()));
    if (w.delta_e > 0.0) out.delta_e = mean_delta_e00(pred, target);
    out.tv = tv_loss(lut);
    out.l2 = l2_residual(residual);
    out.total = w.reconstruction * out.l1 + w.delta_e * out.delta_e + w.smoothness * out.tv + w.residual * out.l2;
    return out;
}

}  // namespace lorlut
