#include "doctest.h"
#include "lorlut/metrics.hpp"
#include "lorlut/optim.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace lorlut;
using namespace lorlut::testing;

namespace {

double max_abs(const Lut3D& lut) {
    double m = 0.0;
    for (const Rgb& e : lut.entries()) {
        for (int ch = 0; ch < 3; ++ch) m = std::max(m, std::abs(e[ch]));
    }
    return m;
}

}  // namespace

TEST_CASE("identity target stays at the identity") {
    const ImageBuffer input = lcg_image(3, 32, 32);
    FitConfig cfg;
    cfg.steps = 500;
    cfg.seed = 11;

    SUBCASE("without the lattice smoothness term the identity is the zero-loss optimum") {
        cfg.weights.smoothness = 0.0;
        const FitResult r = fit_image_pair(input, input, cfg);
        CHECK(max_abs(reconstruct_residual(r.model.factors)) < 1e-3);
        CHECK(psnr(apply_to_image(compose_lut(r.model), input), input) > 50.0);
    }
    SUBCASE("default weights") {
        const FitResult r = fit_image_pair(input, input, cfg);
        CHECK(r.report.psnr > 50.0);
    }
}

TEST_CASE("single identity basis learns a global gain") {
    const ImageBuffer input = lcg_image(4, 32, 32);
    ImageBuffer target = input;
    for (Rgb& p : target.pixels()) p = 0.9 * p;
    FitConfig cfg;
    cfg.basis_count = 1;
    cfg.rank = 0;
    cfg.grid_size = 17;
    cfg.steps = 400;
    const FitResult r = fit_image_pair(input, target, cfg);
    REQUIRE(r.model.alphas.size() == 1);
    CHECK(std::abs(r.model.alphas[0] - 0.9) < 0.02);
}

TEST_CASE("fit is deterministic and the trace is monotone") {
    const ImageBuffer input = lcg_image(5, 16, 16);
    ImageBuffer target = input;
    for (Rgb& p : target.pixels()) p = Rgb{std::sqrt(p.r), p.g, p.b * p.b};
    FitConfig cfg;
    cfg.grid_size = 9;
    cfg.rank = 4;
    cfg.steps = 120;
    cfg.log_every = 10;
    cfg.seed = 99;
    const FitResult a = fit_image_pair(input, target, cfg);
    const FitResult b = fit_image_pair(input, target, cfg);
    CHECK(pack_parameters(a.model) == pack_parameters(b.model));
    REQUIRE(a.report.trace.size() == 13);
    CHECK(a.report.trace.front().step == 1);
    CHECK(a.report.trace.back().step == 120);
    for (std::size_t i = 1; i < a.report.trace.size(); ++i) {
        CHECK(a.report.trace[i].best_total <= a.report.trace[i - 1].best_total);
    }
    CHECK(a.report.trace.back().loss.total < a.report.trace.front().loss.total);

    cfg.seed = 100;
    const FitResult c = fit_image_pair(input, target, cfg);
    CHECK(pack_parameters(a.model) != pack_parameters(c.model));
}

TEST_CASE("fit rejects bad inputs") {
    FitConfig cfg;
    CHECK_THROWS_AS(fit_image_pair(lcg_image(1, 4, 4), lcg_image(1, 4, 5), cfg), DimensionError);
    cfg.steps = 0;
    CHECK_THROWS_AS(fit_image_pair(lcg_image(1, 4, 4), lcg_image(1, 4, 4), cfg), RangeError);
    FitConfig nan_lr;
    nan_lr.base_lr = std::nan("");
    CHECK_THROWS_AS(nan_lr.validate(), RangeError);
}

TEST_CASE("a diverging configuration aborts with a diagnostic") {
    FitConfig cfg;
    cfg.grid_size = 5;
    cfg.rank = 2;
    cfg.steps = 50;
    cfg.base_lr = 1e300;
    ImageBuffer target = lcg_image(7, 8, 8);
    CHECK_THROWS_WITH_AS(fit_image_pair(lcg_image(6, 8, 8), target, cfg), doctest::Contains("non-finite"),
                         NumericError);
}
