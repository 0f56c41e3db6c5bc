#include "doctest.h"
#include "lorlut/loss.hpp"
#include "lorlut/lowrank.hpp"
#include "test_support.hpp"

using namespace lorlut;
using lorlut::testing::Lcg;
using lorlut::testing::lcg_image;
using lorlut::testing::random_lut;

TEST_CASE("tv_loss") {
    CHECK(tv_loss(Lut3D(9, Rgb{0.3, 0.2, 0.9})) == 0.0);
    CHECK(tv_loss(Lut3D(9)) == 0.0);
    // each axis: G^2 (G-1) differences of 1/(G-1) in one channel -> 3 G^2 / (G-1)
    CHECK(std::abs(tv_loss(identity_lut(33)) - 102.09375) <= 1e-9);

    Lcg g(31);
    const Lut3D lut = random_lut(g, 6, -1, 2);
    long double ref = 0.0L;
    for (int k = 0; k < 6; ++k) {
        for (int j = 0; j < 6; ++j) {
            for (int i = 0; i < 6; ++i) {
                for (int ch = 0; ch < 3; ++ch) {
                    if (i < 5) ref += std::pow(static_cast<long double>(lut.at(i + 1, j, k)[ch]) - lut.at(i, j, k)[ch], 2);
                    if (j < 5) ref += std::pow(static_cast<long double>(lut.at(i, j + 1, k)[ch]) - lut.at(i, j, k)[ch], 2);
                    if (k < 5) ref += std::pow(static_cast<long double>(lut.at(i, j, k + 1)[ch]) - lut.at(i, j, k)[ch], 2);
                }
            }
        }
    }
    CHECK(std::abs(tv_loss(lut) - static_cast<double>(ref)) <= 1e-10);
}

TEST_CASE("tv gradient matches central differences") {
    Lcg g(32);
    Lut3D lut = random_lut(g, 4);
    Lut3D grad(4);
    accumulate_tv_gradient(lut, 1.0, grad);
    for (std::size_t e = 0; e < lut.size(); ++e) {
        for (int ch = 0; ch < 3; ++ch) {
            const double keep = lut.entries()[e][ch];
            lut.entries()[e][ch] = keep + 1e-6;
            const double hi = tv_loss(lut);
            lut.entries()[e][ch] = keep - 1e-6;
            const double lo = tv_loss(lut);
            lut.entries()[e][ch] = keep;
            CHECK(grad.entries()[e][ch] == doctest::Approx((hi - lo) / 2e-6).epsilon(1e-6));
        }
    }
}

TEST_CASE("l2_residual") {
    CHECK(l2_residual(Lut3D(5)) == 0.0);
    CHECK(std::abs(l2_residual(Lut3D(33, Rgb{0.1, 0, 0})) - 359.37) <= 1e-9);

    Lcg g(33);
    const Lut3D res = random_lut(g, 7, -1, 1);
    long double ref = 0.0L;
    for (const Rgb& e : res.entries()) {
        for (int ch = 0; ch < 3; ++ch) ref += static_cast<long double>(e[ch]) * e[ch];
    }
    CHECK(std::abs(l2_residual(res) - static_cast<double>(ref)) <= 1e-10);
}

TEST_CASE("loss_total") {
    const ImageBuffer target = lcg_image(34, 12, 9);
    const Lut3D constant(5, Rgb{0.5, 0.5, 0.5});
    const Lut3D zero(5);

    LossWeights w;
    const LossBreakdown none = loss_total(target, target, constant, zero, w);
    CHECK(none.total == 0.0);

    ImageBuffer shifted = target;
    for (Rgb& p : shifted.pixels()) p = p + Rgb{0.1, 0.1, 0.1};
    const LossWeights l1_only{1, 0, 0, 0, 0};
    CHECK(loss_total(shifted, target, constant, zero, l1_only).total == doctest::Approx(0.1).epsilon(1e-12));

    const LossBreakdown reg = loss_total(target, target, identity_lut(33), Lut3D(33), LossWeights{1, 0, 0, 0.001, 0.001});
    CHECK(std::abs(reg.total - 0.10209375) <= 1e-9);

    // breakdown composes bitwise into the total
    Lcg g(35);
    const Lut3D lut = random_lut(g, 5);
    const Lut3D res = random_lut(g, 5, -0.1, 0.1);
    const ImageBuffer pred = lcg_image(36, 12, 9);
    const LossWeights all{0.7, 0, 0.2, 0.003, 0.05};
    const LossBreakdown b = loss_total(pred, target, lut, res, all);
    CHECK(b.delta_e > 0.0);
    CHECK(b.total == all.reconstruction * b.l1 + all.delta_e * b.delta_e + all.smoothness * b.tv + all.residual * b.l2);

    const LossBreakdown inactive = loss_total(pred, target, lut, res, l1_only);
    CHECK(inactive.delta_e == 0.0);

    CHECK_THROWS_AS(loss_total(pred, lcg_image(1, 9, 12), lut, res, all), DimensionError);
    CHECK_THROWS_AS(loss_total(pred, target, lut, res, LossWeights{1, 0.5, 0, 0, 0}), RangeError);
    CHECK_THROWS_AS(loss_total(pred, target, lut, res, LossWeights{-1, 0, 0, 0, 0}), RangeError);
}
