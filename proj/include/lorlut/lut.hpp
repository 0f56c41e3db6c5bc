#pragma once

#include <span>
#include <vector>

#include "lorlut/color.hpp"
#include "lorlut/image.hpp"

namespace lorlut {

/// Dense G x G x G lattice of RGB entries. Index (i, j, k) addresses the red,
/// green and blue axes; red varies fastest in storage, as in .cube files.
/// The same type carries residual tensors, whose entries are unconstrained.
class Lut3D {
public:
    Lut3D() = default;
    /// All entries set to `fill`. Throws RangeError for G < 2.
    explicit Lut3D(int grid_size, Rgb fill = {});
    Lut3D(int grid_size, std::vector<Rgb> entries);

    int grid_size() const { return grid_; }
    std::size_t size() const { return entries_.size(); }

    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) + static_cast<std::size_t>(grid_) * (j + static_cast<std::size_t>(grid_) * k);
    }
    Rgb& at(int i, int j, int k) { return entries_[index(i, j, k)]; }
    const Rgb& at(int i, int j, int k) const { return entries_[index(i, j, k)]; }

    std::span<Rgb> entries() { return entries_; }
    std::span<const Rgb> entries() const { return entries_; }

    bool all_finite() const;
    friend bool operator==(const Lut3D&, const Lut3D&) = default;

private:
    int grid_ = 0;
    std::vector<Rgb> entries_;
};

enum class InterpKind { trilinear, tetrahedral };

/// entry(i,j,k) = (i, j, k) / (G - 1).
Lut3D identity_lut(int grid_size);

/// Eight-vertex trilinear lookup. The input is clamped to [0,1]; c = 1 falls
/// in the last cell with fraction 1.
Rgb sample_trilinear(const Lut3D& lut, const Rgb& c);

/// Six-tetrahedron lookup; ties in the fractional ordering resolve r > g > b.
Rgb sample_tetrahedral(const Lut3D& lut, const Rgb& c);

Rgb sample(const Lut3D& lut, const Rgb& c, InterpKind kind);

ImageBuffer apply_to_image(const Lut3D& lut, const ImageBuffer& img, InterpKind kind = InterpKind::trilinear,
                           bool clamp_output = true);

/// Entrywise sum of alphas[k] * bases[k]. Weights are unconstrained.
Lut3D fuse(std::span<const Lut3D> bases, std::span<const double> alphas);

/// Lattice cell and fractional position of a (clamped) color.
struct LatticeCoord {
    int cell[3];
    double frac[3];
};
LatticeCoord locate(int grid_size, const Rgb& c);

}  // namespace lorlut
