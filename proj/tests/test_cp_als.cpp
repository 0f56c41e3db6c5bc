#include "doctest.h"
#include "lorlut/cp_als.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace lorlut;
using namespace lorlut::testing;

namespace {

double frob(const Lut3D& a) {
    double s = 0.0;
    for (const Rgb& e : a.entries()) s += e.r * e.r + e.g * e.g + e.b * e.b;
    return std::sqrt(s);
}

double relative_diff(const Lut3D& a, const Lut3D& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Rgb d = a.entries()[i] - b.entries()[i];
        s += d.r * d.r + d.g * d.g + d.b * d.b;
    }
    return std::sqrt(s) / frob(a);
}

}  // namespace

TEST_CASE("recovers exact low-rank tensors") {
    for (int rank : {1, 4, 8}) {
        CAPTURE(rank);
        Lcg g(500 + static_cast<std::uint64_t>(rank));
        const Lut3D target = reconstruct_residual(random_factors(g, 17, rank));
        const CpAlsResult res = cp_als_compress(target, rank);
        CHECK(res.relative_error < 1e-6);
        CHECK(res.iterations <= 200);
        CHECK(res.history.size() <= static_cast<std::size_t>(res.iterations));
        CHECK(relative_diff(target, reconstruct_residual(res.factors)) < 1e-6);
        for (std::size_t i = 1; i < res.history.size(); ++i) CHECK(res.history[i] <= res.history[i - 1]);
        CHECK_FALSE(res.ill_conditioned);
    }
}

TEST_CASE("a trapped start is abandoned for a fresh one") {
    // with this tensor the first random start settles near 0.25
    Lcg g(1159);
    const Lut3D target = reconstruct_residual(random_factors(g, 17, 8));
    CpAlsOptions single;
    single.starts = 1;
    const CpAlsResult trapped = cp_als_compress(target, 8, single);
    CHECK(trapped.relative_error > 0.1);
    CHECK(trapped.iterations == 200);

    const CpAlsResult res = cp_als_compress(target, 8);
    CHECK(res.starts > 1);
    CHECK(res.iterations <= 200);
    CHECK(res.relative_error < 1e-6);
    for (std::size_t i = 1; i < res.history.size(); ++i) CHECK(res.history[i] <= res.history[i - 1]);
}

TEST_CASE("reported error matches the reconstruction") {
    Lcg g(510);
    const Lut3D target = random_lut(g, 7, -0.1, 0.1);
    const CpAlsResult res = cp_als_compress(target, 3);
    CHECK(res.relative_error == doctest::Approx(relative_diff(target, reconstruct_residual(res.factors))).epsilon(1e-9));
    CHECK(res.relative_error > 0.1);
}

TEST_CASE("unit-norm spatial factors") {
    Lcg g(511);
    const CpAlsResult res = cp_als_compress(reconstruct_residual(random_factors(g, 9, 2)), 2);
    for (const CpComponent& c : res.factors.components()) {
        for (const auto* vec : {&c.u, &c.v, &c.w}) {
            double n = 0.0;
            for (double x : *vec) n += x * x;
            CHECK(std::sqrt(n) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("constant tensor is rank one") {
    const Lut3D target(9, Rgb{0.25, -0.5, 0.125});
    const CpAlsResult res = cp_als_compress(target, 1);
    CHECK(res.relative_error < 1e-10);
    const Lut3D back = reconstruct_residual(res.factors);
    CHECK(std::abs(back.at(4, 4, 4).g + 0.5) < 1e-10);
}

TEST_CASE("zero residual compresses to zero") {
    const Lut3D zero = residual_against_identity(identity_lut(5));
    for (const Rgb& e : zero.entries()) CHECK(e == Rgb{0, 0, 0});
    const CpAlsResult res = cp_als_compress(zero, 2);
    CHECK(res.relative_error == 0.0);
    const Lut3D back = reconstruct_residual(res.factors);
    for (const Rgb& e : back.entries()) CHECK(e == Rgb{0, 0, 0});
}

TEST_CASE("over-ranked request is flagged ill-conditioned") {
    // rank 1 tensor, rank 3 requested: the extra components collapse
    Lcg g(512);
    const Lut3D target = reconstruct_residual(random_factors(g, 5, 1));
    const CpAlsResult res = cp_als_compress(target, 3);
    CHECK(res.relative_error < 1e-6);
    if (res.ill_conditioned) CHECK_FALSE(res.warning.empty());
}

TEST_CASE("deterministic for a fixed seed") {
    Lcg g(513);
    const Lut3D target = random_lut(g, 5, -0.2, 0.2);
    const CpAlsResult a = cp_als_compress(target, 2);
    const CpAlsResult b = cp_als_compress(target, 2);
    CHECK(a.history == b.history);
}

TEST_CASE("argument validation") {
    CHECK_THROWS_AS(cp_als_compress(Lut3D(5, Rgb{}), 0), RangeError);
    CpAlsOptions o;
    o.max_iters = 0;
    CHECK_THROWS_AS(cp_als_compress(Lut3D(5, Rgb{}), 1, o), RangeError);
    o = CpAlsOptions{};
    o.starts = 0;
    CHECK_THROWS_AS(cp_als_compress(Lut3D(5, Rgb{}), 1, o), RangeError);
    o = CpAlsOptions{};
    o.stall_drop = 1.0;
    CHECK_THROWS_AS(cp_als_compress(Lut3D(5, Rgb{}), 1, o), RangeError);
}
