#pragma once

#include <span>
#include <utility>
#include <vector>

#include "lorlut/optim.hpp"

namespace lorlut {

inline constexpr int kHistogramBins = 32;
/// 3 x 32 histogram bins, 3 means, 3 standard deviations, 3 correlations.
inline constexpr int kFeatureCount = 3 * kHistogramBins + 9;

/// Training-free global descriptor standing in for a convolutional encoder.
/// Channel correlations are 0 where either channel has zero variance.
std::vector<double> extract_global_features(const ImageBuffer& img);

/// One-hidden-layer map from global features to (alphas, CP factors):
/// out = W2 tanh(W1 f + b1) + b2, alpha_k = 1/K + out_k.
struct PredictorWeights {
    int grid_size = 33;
    int basis_count = 0;
    int rank = 8;
    int hidden = 32;
    std::vector<double> w1;  // hidden x kFeatureCount, row-major
    std::vector<double> b1;  // hidden
    std::vector<double> w2;  // outputs x hidden, row-major
    std::vector<double> b2;  // outputs
    std::vector<Lut3D> bases;

    int output_count() const { return basis_count + rank * (3 * grid_size + 3); }
    std::vector<double> pack() const;
    void unpack(std::span<const double> flat);
};

/// W1 random, W2 zero. The u/v/w slots of b2 get the same random start as a
/// per-image fit, the c and alpha slots are zero, so the initial prediction
/// is the identity (K = 0) or the uniform fusion of identity bases.
PredictorWeights init_predictor(int grid_size, int basis_count, int rank, int hidden, std::uint64_t seed);

LorLutModel predictor_forward(const PredictorWeights& p, const ImageBuffer& img);

struct PairLoss {
    double total = 0.0;
    std::vector<double> grads;  // same layout as PredictorWeights::pack()
};

/// Mean loss_total over the pairs and its gradient w.r.t. every predictor weight.
PairLoss predictor_loss_and_gradient(const PredictorWeights& p,
                                     std::span<const std::pair<ImageBuffer, ImageBuffer>> pairs,
                                     const LossWeights& w);

struct AmortizedResult {
    PredictorWeights weights;
    std::vector<double> loss_trace;  // mean loss at every step
};

/// Joint training of the predictor (and bases, when K > 0) across image pairs.
/// Uses the rank / basis_count / grid / optimizer settings of `cfg`.
AmortizedResult train_amortized(std::span<const std::pair<ImageBuffer, ImageBuffer>> pairs, const FitConfig& cfg,
                                int hidden);

}  // namespace lorlut
