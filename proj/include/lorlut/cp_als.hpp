#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lorlut/lowrank.hpp"

namespace lorlut {

struct CpAlsOptions {
    /// Sweep budget shared by all starts.
    int max_iters = 200;
    /// Stop once a sweep improves the relative error by less than this fraction.
    double tol = 1e-10;
    std::uint64_t seed = 0x5eedULL;
    /// Ridge added to the Gram diagonals of every least-squares solve.
    double ridge = 1e-10;
    /// Try an extrapolated step along each sweep's update and keep it when it
    /// lowers the error.
    bool line_search = true;
    /// Random initializations tried at most. A start that stalls is abandoned
    /// for the next one; the best start is returned.
    int starts = 4;
    /// A start stalls when its error drops by less than stall_drop (relative)
    /// over stall_window sweeps.
    int stall_window = 20;
    double stall_drop = 0.01;
};

struct CpAlsResult {
    CpFactors factors;
    /// ||X - X_hat||_F / ||X||_F, 0 for a zero input.
    double relative_error = 0.0;
    /// Sweeps run over all starts.
    int iterations = 0;
    int starts = 0;
    /// Relative error after each sweep of the returned start.
    std::vector<double> history;
    /// Set when a Gram matrix was too close to singular for the requested
    /// rank; the factors are still returned.
    bool ill_conditioned = false;
    std::string warning;
};

/// Rank-R CP fit of a residual tensor by alternating least squares over the
/// u, v, w and color-coefficient blocks. After every sweep u, v, w are scaled
/// to unit norm and the scale moves into c.
CpAlsResult cp_als_compress(const Lut3D& residual, int rank, const CpAlsOptions& opts = {});

/// Residual of a full LUT against the identity; what cp_als_compress expects
/// when compressing an existing LUT.
Lut3D residual_against_identity(const Lut3D& lut);

}  // namespace lorlut
