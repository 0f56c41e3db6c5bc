#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lorlut/image.hpp"
#include "lorlut/loss.hpp"
#include "lorlut/lowrank.hpp"

namespace lorlut {

struct ComponentGradient {
    std::vector<double> u, v, w;
    std::array<double, 3> c{};
};

/// Gradients of the objective. `alphas` and `components` mirror the trainable
/// set of a per-image fit; `bases` (d/dL_k) is used when basis LUTs train too.
struct Gradients {
    std::vector<double> alphas;
    std::vector<Lut3D> bases;
    std::vector<ComponentGradient> components;
};

struct LossAndGradients {
    LossBreakdown loss;
    Gradients grads;
};

/// Forward pass plus analytic gradients through trilinear interpolation, the
/// lattice regularizers and the CP structure. The L1 subgradient at 0 is 0.
/// A non-zero delta_e weight differentiates that term by per-pixel central
/// differences on the predicted color.
LossAndGradients evaluate(const ImageBuffer& input, const ImageBuffer& target, const LorLutModel& model,
                          const LossWeights& w);

Gradients backward(const ImageBuffer& input, const ImageBuffer& target, const LorLutModel& model,
                   const LossWeights& w);

/// Trainable vector layout shared by the optimizer: alphas, then for each
/// component u, v, w, c.
std::vector<double> pack_parameters(const LorLutModel& model);
void unpack_parameters(std::span<const double> flat, LorLutModel& model);
std::vector<double> pack_gradients(const Gradients& g);

enum class LrSchedule { cosine, constant };

struct AdamWConfig {
    double base_lr = 5e-3;
    LrSchedule schedule = LrSchedule::cosine;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
    int total_steps = 2000;
};

struct AdamWState {
    std::vector<double> m;
    std::vector<double> v;
};

/// base_lr * 0.5 * (1 + cos(pi * t / total_steps)) under the cosine schedule.
double learning_rate(const AdamWConfig& cfg, int step);

/// One decoupled-weight-decay Adam update at step t >= 1 (1-based, used for
/// bias correction and the schedule). State vectors are sized on first use.
void adamw_step(std::span<double> params, std::span<const double> grads, AdamWState& state, int step,
                const AdamWConfig& cfg);

struct FitConfig {
    int steps = 2000;
    double base_lr = 5e-3;
    LrSchedule schedule = LrSchedule::cosine;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
    LossWeights weights{};
    int rank = 8;
    int basis_count = 0;
    int grid_size = 33;
    std::uint64_t seed = 0;
    int log_every = 50;

    void validate() const;
    AdamWConfig optimizer() const;
};

struct TraceEntry {
    int step = 0;
    LossBreakdown loss;
    /// Running minimum of the total loss up to this step.
    double best_total = 0.0;
};

struct FitReport {
    std::vector<TraceEntry> trace;
    int steps = 0;
    double final_loss = 0.0;
    double psnr = 0.0;
    /// Absent when the image is smaller than the SSIM window.
    std::optional<double> ssim;
    double mean_delta_e = 0.0;
    double seconds = 0.0;
};

struct FitResult {
    LorLutModel model;
    FitReport report;
};

/// Starting point of a fit: identity bases with alpha = 1/K, axis factors
/// drawn from N(0, 1/G), color coefficients zero (so the residual starts at 0).
LorLutModel initial_model(const FitConfig& cfg);

/// Direct optimization of alphas and CP factors on one image pair. Throws
/// NumericError if the loss turns non-finite.
FitResult fit_image_pair(const ImageBuffer& input, const ImageBuffer& target, const FitConfig& cfg);

/// PSNR / SSIM / mean dE00 of the clamped model output against `target`.
void fill_final_metrics(const LorLutModel& model, const ImageBuffer& input, const ImageBuffer& target,
                        FitReport& report);

}  // namespace lorlut
