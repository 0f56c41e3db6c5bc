#include "lorlut/color.hpp"

#include <cmath>
#include <numbers>

namespace lorlut {
namespace {

constexpr double kDeg = 180.0 / std::numbers::pi;
constexpr double kRad = std::numbers::pi / 180.0;

// linear sRGB -> XYZ, D65
constexpr double kM[3][3] = {
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
};

// Reference white taken as the image of linear (1,1,1) so sRGB white lands
// exactly on L=100, a=b=0.
constexpr double kWhite[3] = {
    kM[0][0] + kM[0][1] + kM[0][2],
    kM[1][0] + kM[1][1] + kM[1][2],
    kM[2][0] + kM[2][1] + kM[2][2],
};

double srgb_to_linear(double v) {
    return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
    constexpr double delta = 6.0 / 29.0;
    return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

double hue_degrees(double b, double a) {
    if (a == 0.0 && b == 0.0) return 0.0;
    double h = std::atan2(b, a) * kDeg;
    return h < 0.0 ? h + 360.0 : h;
}

double pow7(double x) {
    const double x2 = x * x;
    return x2 * x2 * x2 * x;
}

}  // namespace

Lab srgb_to_lab(const Rgb& c) {
    const Rgb cl = clamp01(c);
    const double lin[3] = {srgb_to_linear(cl.r), srgb_to_linear(cl.g), srgb_to_linear(cl.b)};
    double f[3];
    for (int row = 0; row < 3; ++row) {
        const double xyz = kM[row][0] * lin[0] + kM[row][1] * lin[1] + kM[row][2] * lin[2];
        f[row] = lab_f(xyz / kWhite[row]);
    }
    return {116.0 * f[1] - 16.0, 500.0 * (f[0] - f[1]), 200.0 * (f[1] - f[2])};
}

double delta_e00(const Lab& x, const Lab& y) {
    constexpr double k25p7 = 6103515625.0;  // 25^7

    const double c1 = std::hypot(x.a, x.b);
    const double c2 = std::hypot(y.a, y.b);
    const double c_mean7 = pow7(0.5 * (c1 + c2));
    const double g = 0.5 * (1.0 - std::sqrt(c_mean7 / (c_mean7 + k25p7)));

    const double a1 = (1.0 + g) * x.a;
    const double a2 = (1.0 + g) * y.a;
    const double c1p = std::hypot(a1, x.b);
    const double c2p = std::hypot(a2, y.b);
    const double h1p = hue_degrees(x.b, a1);
    const double h2p = hue_degrees(y.b, a2);

    const double dl = y.L - x.L;
    const double dc = c2p - c1p;
    const double chroma_product = c1p * c2p;

    double dh = 0.0;
    if (chroma_product != 0.0) {
        dh = h2p - h1p;
        if (dh > 180.0) {
            dh -= 360.0;
        } else if (dh < -180.0) {
            dh += 360.0;
        }
    }
    const double dH = 2.0 * std::sqrt(chroma_product) * std::sin(0.5 * dh * kRad);

    const double l_mean = 0.5 * (x.L + y.L);
    const double c_mean_p = 0.5 * (c1p + c2p);
    double h_mean = h1p + h2p;
    if (chroma_product != 0.0) {
        if (std::abs(h1p - h2p) <= 180.0) {
            h_mean *= 0.5;
        } else if (h_mean < 360.0) {
            h_mean = 0.5 * (h_mean + 360.0);
        } else {
            h_mean = 0.5 * (h_mean - 360.0);
        }
    }

    const double t = 1.0 - 0.17 * std::cos((h_mean - 30.0) * kRad) + 0.24 * std::cos(2.0 * h_mean * kRad) +
                     0.32 * std::cos((3.0 * h_mean + 6.0) * kRad) - 0.20 * std::cos((4.0 * h_mean - 63.0) * kRad);
    const double hue_rot = (h_mean - 275.0) / 25.0;
    const double d_theta = 30.0 * std::exp(-hue_rot * hue_rot);
    const double c_mean_p7 = pow7(c_mean_p);
    const double rc = 2.0 * std::sqrt(c_mean_p7 / (c_mean_p7 + k25p7));
    const double l50 = (l_mean - 50.0) * (l_mean - 50.0);
    const double sl = 1.0 + 0.015 * l50 / std::sqrt(20.0 + l50);
    const double sc = 1.0 + 0.045 * c_mean_p;
    const double sh = 1.0 + 0.015 * c_mean_p * t;
    const double rt = -std::sin(2.0 * d_theta * kRad) * rc;

    const double tl = dl / sl;
    const double tc = dc / sc;
    const double th = dH / sh;
    return std::sqrt(std::max(0.0, tl * tl + tc * tc + th * th + rt * tc * th));
}

}  // namespace lorlut
