#include "lorlut/lowrank.hpp"

#include <cmath>
#include <string>

#include "lorlut/parallel.hpp"

namespace lorlut {
namespace {

double norm2(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

}  // namespace

CpFactors::CpFactors(int grid_size, int rank) : grid_(grid_size) {
    if (grid_size < 2) throw RangeError("factor grid size must be >= 2");
    if (rank < 0) throw RangeError("rank must be >= 0");
    const auto g = static_cast<std::size_t>(grid_size);
    components_.assign(static_cast<std::size_t>(rank),
                       CpComponent{std::vector<double>(g), std::vector<double>(g), std::vector<double>(g), {}});
}

CpFactors::CpFactors(int grid_size, std::vector<CpComponent> components)
    : grid_(grid_size), components_(std::move(components)) {
    validate();
}

void CpFactors::validate() const {
    if (grid_ < 2) throw RangeError("factor grid size must be >= 2");
    const auto g = static_cast<std::size_t>(grid_);
    for (std::size_t r = 0; r < components_.size(); ++r) {
        const CpComponent& comp = components_[r];
        if (comp.u.size() != g || comp.v.size() != g || comp.w.size() != g) {
            throw DimensionError("component " + std::to_string(r) + " has axis factors not of length " +
                                 std::to_string(grid_));
        }
        for (const auto* vec : {&comp.u, &comp.v, &comp.w}) {
            for (double x : *vec) {
                if (!std::isfinite(x)) throw NumericError("component " + std::to_string(r) + " has a non-finite factor");
            }
        }
        for (double x : comp.c) {
            if (!std::isfinite(x)) throw NumericError("component " + std::to_string(r) + " has a non-finite coefficient");
        }
    }
}

void LorLutModel::validate() const {
    if (grid_size < 2) throw RangeError("model grid size must be >= 2");
    if (bases.size() != alphas.size()) {
        throw DimensionError("model has " + std::to_string(bases.size()) + " bases but " +
                             std::to_string(alphas.size()) + " fusion weights");
    }
    for (const Lut3D& b : bases) {
        if (b.grid_size() != grid_size) throw DimensionError("basis grid size differs from model grid size");
    }
    if (factors.grid_size() != grid_size) throw DimensionError("factor grid size differs from model grid size");
    factors.validate();
}

LorLutModel identity_model(int grid_size) {
    LorLutModel m;
    m.grid_size = grid_size;
    m.factors = CpFactors(grid_size);
    return m;
}

Lut3D reconstruct_residual(const CpFactors& f, const ComponentScales& s) {
    if (s.size() != f.rank()) {
        throw DimensionError("scale vector has length " + std::to_string(s.size()) + ", rank is " +
                             std::to_string(f.rank()));
    }
    const int g = f.grid_size();
    Lut3D out(g);
    const auto dst = out.entries();
    const std::size_t slice = static_cast<std::size_t>(g) * g;
    // Each blue slice is written by exactly one worker.
    parallel_for(static_cast<std::size_t>(g), [&](std::size_t k_begin, std::size_t k_end) {
        for (int r = 0; r < f.rank(); ++r) {
            const CpComponent& comp = f[r];
            const double sr = s.values[static_cast<std::size_t>(r)];
            const double cr = sr * comp.c[0], cg = sr * comp.c[1], cb = sr * comp.c[2];
            for (std::size_t k = k_begin; k < k_end; ++k) {
                for (int j = 0; j < g; ++j) {
                    const double vw = comp.v[static_cast<std::size_t>(j)] * comp.w[k];
                    Rgb* row = dst.data() + k * slice + static_cast<std::size_t>(j) * g;
                    for (int i = 0; i < g; ++i) {
                        const double t = comp.u[static_cast<std::size_t>(i)] * vw;
                        row[i].r += cr * t;
                        row[i].g += cg * t;
                        row[i].b += cb * t;
                    }
                }
            }
        }
    }, 4);
    return out;
}

Lut3D reconstruct_residual(const CpFactors& f) { return reconstruct_residual(f, ComponentScales::ones(f.rank())); }

Lut3D base_lut(const LorLutModel& m) {
    if (m.bases.empty()) return identity_lut(m.grid_size);
    return fuse(m.bases, m.alphas);
}

Lut3D compose_lut(const LorLutModel& m, const ComponentScales& s) {
    m.validate();
    Lut3D out = base_lut(m);
    if (m.rank() == 0) {
        if (s.size() != 0) throw DimensionError("scale vector given for a rank-0 model");
        return out;
    }
    const Lut3D residual = reconstruct_residual(m.factors, s);
    const auto dst = out.entries();
    const auto add = residual.entries();
    for (std::size_t e = 0; e < dst.size(); ++e) dst[e] += add[e];
    return out;
}

Lut3D compose_lut(const LorLutModel& m) { return compose_lut(m, ComponentScales::ones(m.rank())); }

std::int64_t residual_param_count(int grid_size, int rank) {
    return 3LL * grid_size * rank + 3LL * rank;
}

std::int64_t dense_param_count(int grid_size) {
    const std::int64_t g = grid_size;
    return 3 * g * g * g;
}

ParamBreakdown total_param_count(int grid_size, int basis_count, int rank) {
    constexpr std::int64_t kConvTrunk = 5088;
    const std::int64_t g = grid_size;
    ParamBreakdown p;
    p.weight_predictor = kConvTrunk + 33LL * basis_count;
    p.residual_predictor = kConvTrunk + 99LL * rank * (g + 1);
    p.basis_luts = basis_count * dense_param_count(grid_size);
    p.total = p.weight_predictor + p.residual_predictor + p.basis_luts;
    return p;
}

ComponentCurves component_curves(const CpFactors& f, int r) {
    if (r < 0 || r >= f.rank()) {
        throw RangeError("component index " + std::to_string(r) + " out of range for rank " + std::to_string(f.rank()));
    }
    const CpComponent& comp = f[r];
    ComponentCurves out{comp.u, comp.v, comp.w, comp.c, 0.0};
    const double cn = std::sqrt(comp.c[0] * comp.c[0] + comp.c[1] * comp.c[1] + comp.c[2] * comp.c[2]);
    out.magnitude = cn * norm2(comp.u) * norm2(comp.v) * norm2(comp.w);
    return out;
}

}  // namespace lorlut
