#include "lorlut/lut.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <string>

#include "lorlut/parallel.hpp"

namespace lorlut {

Lut3D::Lut3D(int grid_size, Rgb fill) : grid_(grid_size) {
    if (grid_size < 2) throw RangeError("LUT grid size must be >= 2, got " + std::to_string(grid_size));
    entries_.assign(static_cast<std::size_t>(grid_size) * grid_size * grid_size, fill);
}

Lut3D::Lut3D(int grid_size, std::vector<Rgb> entries) : grid_(grid_size), entries_(std::move(entries)) {
    if (grid_size < 2) throw RangeError("LUT grid size must be >= 2, got " + std::to_string(grid_size));
    const std::size_t expected = static_cast<std::size_t>(grid_size) * grid_size * grid_size;
    if (entries_.size() != expected) {
        throw DimensionError("LUT of size " + std::to_string(grid_size) + " needs " + std::to_string(expected) +
                             " entries, got " + std::to_string(entries_.size()));
    }
}

bool Lut3D::all_finite() const {
    return std::all_of(entries_.begin(), entries_.end(), [](const Rgb& e) { return e.finite(); });
}

Lut3D identity_lut(int grid_size) {
    Lut3D lut(grid_size);
    const double step = static_cast<double>(grid_size - 1);
    for (int k = 0; k < grid_size; ++k) {
        for (int j = 0; j < grid_size; ++j) {
            for (int i = 0; i < grid_size; ++i) lut.at(i, j, k) = {i / step, j / step, k / step};
        }
    }
    return lut;
}

LatticeCoord locate(int grid_size, const Rgb& c) {
    const Rgb cl = clamp01(c);
    const double span = grid_size - 1;
    LatticeCoord out{};
    for (int ax = 0; ax < 3; ++ax) {
        double x = cl[ax] * span;
        // (i / (G-1)) * (G-1) can land one ulp short of i; snap so lattice
        // inputs hit their vertex exactly.
        const double nearest = std::round(x);
        if (std::abs(x - nearest) <= 4.0 * std::numeric_limits<double>::epsilon() * span) x = nearest;
        const int cell = std::min(static_cast<int>(x), grid_size - 2);
        out.cell[ax] = cell;
        out.frac[ax] = x - cell;
    }
    return out;
}

Rgb sample_trilinear(const Lut3D& lut, const Rgb& c) {
    const LatticeCoord p = locate(lut.grid_size(), c);
    const int i = p.cell[0], j = p.cell[1], k = p.cell[2];
    const double fr = p.frac[0], fg = p.frac[1], fb = p.frac[2];
#ifndef NDEBUG
    double weight_sum = 0.0;
    for (double wr : {1.0 - fr, fr}) {
        for (double wg : {1.0 - fg, fg}) {
            for (double wb : {1.0 - fb, fb}) {
                assert(wr * wg * wb >= 0.0);
                weight_sum += wr * wg * wb;
            }
        }
    }
    assert(std::abs(weight_sum - 1.0) < 1e-12);
#endif
    // Nested lerps expand to the eight-vertex weighted sum and stay exact on
    // vertices and on constant cells.
    Rgb out;
    for (int ch = 0; ch < 3; ++ch) {
        const double c00 = std::lerp(lut.at(i, j, k)[ch], lut.at(i + 1, j, k)[ch], fr);
        const double c10 = std::lerp(lut.at(i, j + 1, k)[ch], lut.at(i + 1, j + 1, k)[ch], fr);
        const double c01 = std::lerp(lut.at(i, j, k + 1)[ch], lut.at(i + 1, j, k + 1)[ch], fr);
        const double c11 = std::lerp(lut.at(i, j + 1, k + 1)[ch], lut.at(i + 1, j + 1, k + 1)[ch], fr);
        out[ch] = std::lerp(std::lerp(c00, c10, fg), std::lerp(c01, c11, fg), fb);
    }
    return out;
}

Rgb sample_tetrahedral(const Lut3D& lut, const Rgb& c) {
    const LatticeCoord p = locate(lut.grid_size(), c);
    const int i = p.cell[0], j = p.cell[1], k = p.cell[2];
    const double fr = p.frac[0], fg = p.frac[1], fb = p.frac[2];
    const Rgb& c000 = lut.at(i, j, k);
    const Rgb& c111 = lut.at(i + 1, j + 1, k + 1);

    // Walk from c000 to c111 along the axes in decreasing fractional order.
    if (fr >= fg) {
        if (fg >= fb) {
            return (1.0 - fr) * c000 + (fr - fg) * lut.at(i + 1, j, k) + (fg - fb) * lut.at(i + 1, j + 1, k) + fb * c111;
        }
        if (fr >= fb) {
            return (1.0 - fr) * c000 + (fr - fb) * lut.at(i + 1, j, k) + (fb - fg) * lut.at(i + 1, j, k + 1) + fg * c111;
        }
        return (1.0 - fb) * c000 + (fb - fr) * lut.at(i, j, k + 1) + (fr - fg) * lut.at(i + 1, j, k + 1) + fg * c111;
    }
    if (fb > fg) {
        return (1.0 - fb) * c000 + (fb - fg) * lut.at(i, j, k + 1) + (fg - fr) * lut.at(i, j + 1, k + 1) + fr * c111;
    }
    if (fb > fr) {
        return (1.0 - fg) * c000 + (fg - fb) * lut.at(i, j + 1, k) + (fb - fr) * lut.at(i, j + 1, k + 1) + fr * c111;
    }
    return (1.0 - fg) * c000 + (fg - fr) * lut.at(i, j + 1, k) + (fr - fb) * lut.at(i + 1, j + 1, k) + fb * c111;
}

Rgb sample(const Lut3D& lut, const Rgb& c, InterpKind kind) {
    return kind == InterpKind::trilinear ? sample_trilinear(lut, c) : sample_tetrahedral(lut, c);
}

ImageBuffer apply_to_image(const Lut3D& lut, const ImageBuffer& img, InterpKind kind, bool clamp_output) {
    ImageBuffer out(img.width(), img.height());
    const auto src = img.pixels();
    const auto dst = out.pixels();
    parallel_for(src.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            const Rgb v = sample(lut, src[p], kind);
            dst[p] = clamp_output ? clamp01(v) : v;
        }
    });
    return out;
}

Lut3D fuse(std::span<const Lut3D> bases, std::span<const double> alphas) {
    if (bases.empty()) throw DimensionError("fuse: empty basis list");
    if (bases.size() != alphas.size()) {
        throw DimensionError("fuse: " + std::to_string(bases.size()) + " bases but " + std::to_string(alphas.size()) +
                             " weights");
    }
    const int grid = bases.front().grid_size();
    for (const Lut3D& b : bases) {
        if (b.grid_size() != grid) throw DimensionError("fuse: bases have mismatched grid sizes");
    }
    Lut3D out(grid);
    const auto dst = out.entries();
    const auto first = bases.front().entries();
    for (std::size_t e = 0; e < dst.size(); ++e) dst[e] = alphas[0] * first[e];
    for (std::size_t k = 1; k < bases.size(); ++k) {
        const auto src = bases[k].entries();
        for (std::size_t e = 0; e < dst.size(); ++e) dst[e] += alphas[k] * src[e];
    }
    return out;
}

}  // namespace lorlut
