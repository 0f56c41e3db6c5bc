#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "lorlut/lut.hpp"

namespace lorlut {

/// One rank-1 term c (x) u (x) v (x) w of the residual: u, v, w run along the
/// red, green and blue lattice axes, c mixes the result into RGB.
struct CpComponent {
    std::vector<double> u, v, w;
    std::array<double, 3> c{};

    friend bool operator==(const CpComponent&, const CpComponent&) = default;
};

/// Rank-R factor set. Rank 0 is valid and reconstructs to zero.
class CpFactors {
public:
    CpFactors() = default;
    explicit CpFactors(int grid_size, int rank = 0);
    CpFactors(int grid_size, std::vector<CpComponent> components);

    int grid_size() const { return grid_; }
    int rank() const { return static_cast<int>(components_.size()); }

    CpComponent& operator[](int r) { return components_[static_cast<std::size_t>(r)]; }
    const CpComponent& operator[](int r) const { return components_[static_cast<std::size_t>(r)]; }
    const std::vector<CpComponent>& components() const { return components_; }

    void validate() const;
    friend bool operator==(const CpFactors&, const CpFactors&) = default;

private:
    int grid_ = 2;
    std::vector<CpComponent> components_;
};

/// Per-component multipliers on c_r (viewer sliders).
struct ComponentScales {
    std::vector<double> values;

    static ComponentScales ones(int rank) { return {std::vector<double>(static_cast<std::size_t>(rank), 1.0)}; }
    static ComponentScales zeros(int rank) { return {std::vector<double>(static_cast<std::size_t>(rank), 0.0)}; }
    int size() const { return static_cast<int>(values.size()); }
};

/// Fused dense bases plus a CP residual. With no bases the base is identity_lut(G).
struct LorLutModel {
    int grid_size = 33;
    std::vector<Lut3D> bases;
    std::vector<double> alphas;
    CpFactors factors{33};

    int basis_count() const { return static_cast<int>(bases.size()); }
    int rank() const { return factors.rank(); }
    void validate() const;
    friend bool operator==(const LorLutModel&, const LorLutModel&) = default;
};

/// Identity base, no residual components.
LorLutModel identity_model(int grid_size);

/// Delta[i,j,k][ch] = sum_r s_r c_r[ch] u_r[i] v_r[j] w_r[k].
Lut3D reconstruct_residual(const CpFactors& f, const ComponentScales& s);
Lut3D reconstruct_residual(const CpFactors& f);

/// Base (identity or fused bases) plus the scaled residual.
Lut3D compose_lut(const LorLutModel& m, const ComponentScales& s);
Lut3D compose_lut(const LorLutModel& m);

/// Base LUT alone: identity for K = 0, else the alpha-weighted fusion.
Lut3D base_lut(const LorLutModel& m);

/// 3GR + 3R.
std::int64_t residual_param_count(int grid_size, int rank);
/// 3G^3, the dense LUT the residual stands in for.
std::int64_t dense_param_count(int grid_size);

struct ParamBreakdown {
    std::int64_t weight_predictor = 0;    // 5088 + 33K
    std::int64_t residual_predictor = 0;  // 5088 + 99R(G+1)
    std::int64_t basis_luts = 0;          // 3KG^3
    std::int64_t total = 0;
};

/// Learnable parameters of the full predictor-driven model, including the
/// fixed 5088-parameter convolutional trunk of each predictor.
ParamBreakdown total_param_count(int grid_size, int basis_count, int rank);

struct ComponentCurves {
    std::vector<double> u, v, w;
    std::array<double, 3> c{};
    /// |c| |u| |v| |w|, the Frobenius norm of the rank-1 term. A display
    /// quantity, not part of the model.
    double magnitude = 0.0;
};

/// Zero-based component index; throws RangeError when out of range.
ComponentCurves component_curves(const CpFactors& f, int r);

}  // namespace lorlut
