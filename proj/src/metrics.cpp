#include "lorlut/metrics.hpp"

#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace lorlut {
namespace {

constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kSsimWindow> gaussian_taps() {
    std::array<double, kSsimWindow> taps{};
    double total = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - kSsimWindow / 2;
        taps[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        total += taps[i];
    }
    for (double& t : taps) t /= total;
    return taps;
}

// Separable 'valid' Gaussian filter of a single-channel plane.
std::vector<double> filter_valid(const std::vector<double>& plane, int w, int h,
                                 const std::array<double, kSsimWindow>& taps) {
    const int ow = w - kSsimWindow + 1;
    const int oh = h - kSsimWindow + 1;
    std::vector<double> rows(static_cast<std::size_t>(ow) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int t = 0; t < kSsimWindow; ++t) acc += taps[t] * plane[static_cast<std::size_t>(y) * w + x + t];
            rows[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int t = 0; t < kSsimWindow; ++t) acc += taps[t] * rows[static_cast<std::size_t>(y + t) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    }
    return out;
}

double ssim_channel(const ImageBuffer& a, const ImageBuffer& b, int ch, const std::array<double, kSsimWindow>& taps) {
    const int w = a.width();
    const int h = a.height();
    const std::size_t n = a.size();
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = a.pixels()[i][ch];
        y[i] = b.pixels()[i][ch];
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, w, h, taps);
    const auto my = filter_valid(y, w, h, taps);
    const auto mxx = filter_valid(xx, w, h, taps);
    const auto myy = filter_valid(yy, w, h, taps);
    const auto mxy = filter_valid(xy, w, h, taps);

    double total = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
        const double vx = mxx[i] - mx[i] * mx[i];
        const double vy = myy[i] - my[i] * my[i];
        const double cov = mxy[i] - mx[i] * my[i];
        const double num = (2.0 * mx[i] * my[i] + kC1) * (2.0 * cov + kC2);
        const double den = (mx[i] * mx[i] + my[i] * my[i] + kC1) * (vx + vy + kC2);
        total += num / den;
    }
    return total / static_cast<double>(mx.size());
}

}  // namespace

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
    require_same_shape(a, b, "psnr");
    if (a.empty()) throw RangeError("psnr: empty image");
    double sum = 0.0;
    const auto pa = a.pixels();
    const auto pb = b.pixels();
    for (std::size_t i = 0; i < pa.size(); ++i) {
        for (int ch = 0; ch < 3; ++ch) {
            const double d = pa[i][ch] - pb[i][ch];
            sum += d * d;
        }
    }
    const double mse = sum / (3.0 * static_cast<double>(pa.size()));
    if (mse == 0.0) return kPsnrInfinite;
    return -10.0 * std::log10(mse);
}

double ssim(const ImageBuffer& a, const ImageBuffer& b) {
    require_same_shape(a, b, "ssim");
    if (a.width() < kSsimWindow || a.height() < kSsimWindow) {
        throw RangeError("ssim: image " + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                         " is smaller than the " + std::to_string(kSsimWindow) + "x" +
                         std::to_string(kSsimWindow) + " window");
    }
    static const auto taps = gaussian_taps();
    double total = 0.0;
    for (int ch = 0; ch < 3; ++ch) total += ssim_channel(a, b, ch, taps);
    return total / 3.0;
}

double mean_delta_e00(const ImageBuffer& a, const ImageBuffer& b) {
    require_same_shape(a, b, "mean_delta_e00");
    if (a.empty()) throw RangeError("mean_delta_e00: empty image");
    double sum = 0.0;
    const auto pa = a.pixels();
    const auto pb = b.pixels();
    for (std::size_t i = 0; i < pa.size(); ++i) sum += delta_e00(srgb_to_lab(pa[i]), srgb_to_lab(pb[i]));
    return sum / static_cast<double>(pa.size());
}

}  // namespace lorlut
