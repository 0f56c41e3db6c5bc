#pragma once

#include <algorithm>
#include <cmath>

namespace lorlut {

/// Normalized RGB triple. Nominally in [0,1]; out-of-range values are allowed
/// until something clamps them.
struct Rgb {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;

    constexpr double& operator[](int ch) { return ch == 0 ? r : (ch == 1 ? g : b); }
    constexpr double operator[](int ch) const { return ch == 0 ? r : (ch == 1 ? g : b); }

    constexpr Rgb& operator+=(const Rgb& o) {
        r += o.r;
        g += o.g;
        b += o.b;
        return *this;
    }
    friend constexpr Rgb operator+(Rgb a, const Rgb& o) { return a += o; }
    friend constexpr Rgb operator-(const Rgb& a, const Rgb& o) { return {a.r - o.r, a.g - o.g, a.b - o.b}; }
    friend constexpr Rgb operator*(double s, const Rgb& a) { return {s * a.r, s * a.g, s * a.b}; }
    friend constexpr bool operator==(const Rgb&, const Rgb&) = default;

    bool finite() const { return std::isfinite(r) && std::isfinite(g) && std::isfinite(b); }
};

inline Rgb clamp01(const Rgb& c) {
    // "+ 0.0" turns a clamped -0.0 into +0.0
    return {std::clamp(c.r, 0.0, 1.0) + 0.0, std::clamp(c.g, 0.0, 1.0) + 0.0,
            std::clamp(c.b, 0.0, 1.0) + 0.0};
}

struct Lab {
    double L = 0.0;
    double a = 0.0;
    double b = 0.0;
};

/// sRGB (D65, 2 degree observer) to CIELAB. Input is clamped to [0,1] first.
Lab srgb_to_lab(const Rgb& c);

/// CIEDE2000 color difference with kL = kC = kH = 1.
double delta_e00(const Lab& x, const Lab& y);

}  // namespace lorlut
