#pragma once

#include "lorlut/image.hpp"
#include "lorlut/lut.hpp"

namespace lorlut {

/// Weights of the training objective. The perceptual term (lambda2) has no
/// implementation and must stay 0.
struct LossWeights {
    double reconstruction = 1.0;  // lambda1, mean absolute error
    double perceptual = 0.0;      // lambda2
    double delta_e = 0.0;         // lambda3, mean CIEDE2000
    double smoothness = 0.001;    // lambda4, TV on the composed LUT
    double residual = 0.001;      // lambda5, squared norm of the residual

    void validate() const;
};

/// Unweighted terms plus the weighted total
/// total = l1*rec + de*delta_e + tv*smooth + l2*resid, evaluated in that order.
struct LossBreakdown {
    double l1 = 0.0;
    double delta_e = 0.0;
    double tv = 0.0;
    double l2 = 0.0;
    double total = 0.0;
};

/// Sum over the three lattice axes of squared adjacent differences, all channels.
double tv_loss(const Lut3D& lut);

/// Adds scale * d(tv_loss)/d(entry) into `grad` (same grid as `lut`).
void accumulate_tv_gradient(const Lut3D& lut, double scale, Lut3D& grad);

/// Sum of squared entries.
double l2_residual(const Lut3D& residual);

LossBreakdown loss_total(const ImageBuffer& pred, const ImageBuffer& target, const Lut3D& lut,
                         const Lut3D& residual, const LossWeights& w);

}  // namespace lorlut
