#include "lorlut/optim.hpp"

#include <chrono>
#include <limits>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "lorlut/metrics.hpp"

namespace lorlut {
namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// d(dE00)/d(pred) for one pixel by central differences.
Rgb delta_e_gradient(const Rgb& pred, const Rgb& target) {
    constexpr double h = 1e-6;
    const Lab t = srgb_to_lab(target);
    Rgb g;
    for (int ch = 0; ch < 3; ++ch) {
        Rgb hi = pred, lo = pred;
        hi[ch] += h;
        lo[ch] -= h;
        g[ch] = (delta_e00(srgb_to_lab(hi), t) - delta_e00(srgb_to_lab(lo), t)) / (2.0 * h);
    }
    return g;
}

void factor_gradients(const CpFactors& f, const Lut3D& grad_residual, std::vector<ComponentGradient>& out) {
    const int g = f.grid_size();
    const auto gs = static_cast<std::size_t>(g);
    out.assign(static_cast<std::size_t>(f.rank()), ComponentGradient{std::vector<double>(gs), std::vector<double>(gs),
                                                                      std::vector<double>(gs), {}});
    for (int r = 0; r < f.rank(); ++r) {
        const CpComponent& comp = f[r];
        ComponentGradient& d = out[static_cast<std::size_t>(r)];
        for (int k = 0; k < g; ++k) {
            for (int j = 0; j < g; ++j) {
                const double vw = comp.v[static_cast<std::size_t>(j)] * comp.w[static_cast<std::size_t>(k)];
                double row_pu = 0.0;
                double dc[3] = {0.0, 0.0, 0.0};
                for (int i = 0; i < g; ++i) {
                    const Rgb& ge = grad_residual.at(i, j, k);
                    const double ui = comp.u[static_cast<std::size_t>(i)];
                    const double p = ge.r * comp.c[0] + ge.g * comp.c[1] + ge.b * comp.c[2];
                    d.u[static_cast<std::size_t>(i)] += p * vw;
                    row_pu += p * ui;
                    dc[0] += ge.r * ui;
                    dc[1] += ge.g * ui;
                    dc[2] += ge.b * ui;
                }
                d.v[static_cast<std::size_t>(j)] += row_pu * comp.w[static_cast<std::size_t>(k)];
                d.w[static_cast<std::size_t>(k)] += row_pu * comp.v[static_cast<std::size_t>(j)];
                for (int ch = 0; ch < 3; ++ch) d.c[static_cast<std::size_t>(ch)] += dc[ch] * vw;
            }
        }
    }
}

}  // namespace

LossAndGradients evaluate(const ImageBuffer& input, const ImageBuffer& target, const LorLutModel& model,
                          const LossWeights& w) {
    w.validate();
    model.validate();
    require_same_shape(input, target, "evaluate");
    if (input.empty()) throw RangeError("evaluate: empty image");

    const int g = model.grid_size;
    const Lut3D residual = reconstruct_residual(model.factors);
    Lut3D lut = base_lut(model);
    {
        const auto dst = lut.entries();
        const auto add = residual.entries();
        for (std::size_t e = 0; e < dst.size(); ++e) dst[e] += add[e];
    }
    const ImageBuffer pred = apply_to_image(lut, input, InterpKind::trilinear, false);

    LossAndGradients out;
    out.loss = loss_total(pred, target, lut, residual, w);

    // Upstream image gradient scattered onto the lattice.
    Lut3D grad_lut(g);
    const auto src = input.pixels();
    const auto p = pred.pixels();
    const auto t = target.pixels();
    const double l1_scale = w.reconstruction / (3.0 * static_cast<double>(src.size()));
    const double de_scale = w.delta_e / static_cast<double>(src.size());
    for (std::size_t n = 0; n < src.size(); ++n) {
        Rgb up{l1_scale * sign(p[n].r - t[n].r), l1_scale * sign(p[n].g - t[n].g), l1_scale * sign(p[n].b - t[n].b)};
        if (w.delta_e > 0.0) up += de_scale * delta_e_gradient(p[n], t[n]);
        if (up.r == 0.0 && up.g == 0.0 && up.b == 0.0) continue;

        const LatticeCoord c = locate(g, src[n]);
        const double wr[2] = {1.0 - c.frac[0], c.frac[0]};
        const double wg[2] = {1.0 - c.frac[1], c.frac[1]};
        const double wb[2] = {1.0 - c.frac[2], c.frac[2]};
        for (int db = 0; db < 2; ++db) {
            for (int dg = 0; dg < 2; ++dg) {
                for (int dr = 0; dr < 2; ++dr) {
                    grad_lut.at(c.cell[0] + dr, c.cell[1] + dg, c.cell[2] + db) += (wr[dr] * wg[dg] * wb[db]) * up;
                }
            }
        }
    }
    if (w.smoothness > 0.0) accumulate_tv_gradient(lut, w.smoothness, grad_lut);

    Gradients& grads = out.grads;
    const auto gl = grad_lut.entries();
    for (int k = 0; k < model.basis_count(); ++k) {
        const auto basis = model.bases[static_cast<std::size_t>(k)].entries();
        double dot = 0.0;
        for (std::size_t e = 0; e < gl.size(); ++e) dot += gl[e].r * basis[e].r + gl[e].g * basis[e].g + gl[e].b * basis[e].b;
        grads.alphas.push_back(dot);

        Lut3D db(g);
        const double a = model.alphas[static_cast<std::size_t>(k)];
        const auto dst = db.entries();
        for (std::size_t e = 0; e < gl.size(); ++e) dst[e] = a * gl[e];
        grads.bases.push_back(std::move(db));
    }

    if (model.rank() > 0) {
        Lut3D grad_residual = grad_lut;
        if (w.residual > 0.0) {
            const auto dst = grad_residual.entries();
            const auto res = residual.entries();
            for (std::size_t e = 0; e < dst.size(); ++e) dst[e] += (2.0 * w.residual) * res[e];
        }
        factor_gradients(model.factors, grad_residual, grads.components);
    }
    return out;
}

Gradients backward(const ImageBuffer& input, const ImageBuffer& target, const LorLutModel& model,
                   const LossWeights& w) {
    return evaluate(input, target, model, w).grads;
}

std::vector<double> pack_parameters(const LorLutModel& model) {
    std::vector<double> flat(model.alphas);
    for (const CpComponent& comp : model.factors.components()) {
        flat.insert(flat.end(), comp.u.begin(), comp.u.end());
        flat.insert(flat.end(), comp.v.begin(), comp.v.end());
        flat.insert(flat.end(), comp.w.begin(), comp.w.end());
        flat.insert(flat.end(), comp.c.begin(), comp.c.end());
    }
    return flat;
}

void unpack_parameters(std::span<const double> flat, LorLutModel& model) {
    const std::size_t g = static_cast<std::size_t>(model.grid_size);
    const std::size_t expected = model.alphas.size() + static_cast<std::size_t>(model.rank()) * (3 * g + 3);
    if (flat.size() != expected) {
        throw DimensionError("parameter vector has " + std::to_string(flat.size()) + " values, model needs " +
                             std::to_string(expected));
    }
    auto it = flat.begin();
    for (double& a : model.alphas) a = *it++;
    for (int r = 0; r < model.rank(); ++r) {
        CpComponent& comp = model.factors[r];
        for (auto* vec : {&comp.u, &comp.v, &comp.w}) {
            for (double& x : *vec) x = *it++;
        }
        for (double& x : comp.c) x = *it++;
    }
}

std::vector<double> pack_gradients(const Gradients& g) {
    std::vector<double> flat(g.alphas);
    for (const ComponentGradient& comp : g.components) {
        flat.insert(flat.end(), comp.u.begin(), comp.u.end());
        flat.insert(flat.end(), comp.v.begin(), comp.v.end());
        flat.insert(flat.end(), comp.w.begin(), comp.w.end());
        flat.insert(flat.end(), comp.c.begin(), comp.c.end());
    }
    return flat;
}

double learning_rate(const AdamWConfig& cfg, int step) {
    if (cfg.schedule == LrSchedule::constant) return cfg.base_lr;
    return cfg.base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * step / cfg.total_steps));
}

void adamw_step(std::span<double> params, std::span<const double> grads, AdamWState& state, int step,
                const AdamWConfig& cfg) {
    if (params.size() != grads.size()) {
        throw DimensionError("adamw_step: " + std::to_string(params.size()) + " parameters but " +
                             std::to_string(grads.size()) + " gradients");
    }
    if (step < 1) throw RangeError("adamw_step: step must be >= 1");
    if (state.m.empty() && state.v.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    if (state.m.size() != params.size() || state.v.size() != params.size()) {
        throw DimensionError("adamw_step: optimizer state does not match the parameter count");
    }

    const double lr = learning_rate(cfg, step);
    const double bias1 = 1.0 - std::pow(cfg.beta1, step);
    const double bias2 = 1.0 - std::pow(cfg.beta2, step);
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
        const double m_hat = state.m[i] / bias1;
        const double v_hat = state.v[i] / bias2;
        params[i] -= lr * cfg.weight_decay * params[i];
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
}

void FitConfig::validate() const {
    if (steps < 1) throw RangeError("fit: steps must be >= 1");
    if (!(base_lr > 0.0) || !std::isfinite(base_lr)) throw RangeError("fit: learning rate must be positive");
    if (!(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0)) throw RangeError("fit: betas must lie in (0,1)");
    if (!(eps > 0.0)) throw RangeError("fit: eps must be positive");
    if (weight_decay < 0.0) throw RangeError("fit: weight decay must be non-negative");
    if (rank < 0 || basis_count < 0) throw RangeError("fit: rank and basis count must be non-negative");
    if (grid_size < 2) throw RangeError("fit: grid size must be >= 2");
    if (log_every < 1) throw RangeError("fit: log_every must be >= 1");
    weights.validate();
}

AdamWConfig FitConfig::optimizer() const {
    return {base_lr, schedule, beta1, beta2, eps, weight_decay, steps};
}

LorLutModel initial_model(const FitConfig& cfg) {
    LorLutModel m;
    m.grid_size = cfg.grid_size;
    for (int k = 0; k < cfg.basis_count; ++k) {
        m.bases.push_back(identity_lut(cfg.grid_size));
        m.alphas.push_back(1.0 / cfg.basis_count);
    }
    m.factors = CpFactors(cfg.grid_size, cfg.rank);
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(cfg.grid_size)));
    for (int r = 0; r < cfg.rank; ++r) {
        CpComponent& comp = m.factors[r];
        for (auto* vec : {&comp.u, &comp.v, &comp.w}) {
            for (double& x : *vec) x = normal(rng);
        }
    }
    return m;
}

void fill_final_metrics(const LorLutModel& model, const ImageBuffer& input, const ImageBuffer& target,
                        FitReport& report) {
    const ImageBuffer out = apply_to_image(compose_lut(model), input, InterpKind::trilinear, true);
    report.psnr = psnr(out, target);
    report.mean_delta_e = mean_delta_e00(out, target);
    if (out.width() >= kSsimWindow && out.height() >= kSsimWindow) {
        report.ssim = ssim(out, target);
    } else {
        report.ssim.reset();
    }
}

FitResult fit_image_pair(const ImageBuffer& input, const ImageBuffer& target, const FitConfig& cfg) {
    cfg.validate();
    require_same_shape(input, target, "fit_image_pair");
    const auto start = std::chrono::steady_clock::now();

    FitResult result{initial_model(cfg), {}};
    LorLutModel& model = result.model;
    FitReport& report = result.report;
    const AdamWConfig opt = cfg.optimizer();
    AdamWState state;
    std::vector<double> params = pack_parameters(model);
    double best = std::numeric_limits<double>::infinity();

    for (int step = 1; step <= cfg.steps; ++step) {
        const LossAndGradients lg = evaluate(input, target, model, cfg.weights);
        if (!std::isfinite(lg.loss.total)) {
            std::ostringstream msg;
            msg << "fit: loss became non-finite at step " << step << " (l1=" << lg.loss.l1 << ", tv=" << lg.loss.tv
                << ", l2=" << lg.loss.l2 << ")";
            throw NumericError(msg.str());
        }
        best = std::min(best, lg.loss.total);
        if (step == 1 || step % cfg.log_every == 0 || step == cfg.steps) {
            report.trace.push_back({step, lg.loss, best});
        }
        const std::vector<double> grads = pack_gradients(lg.grads);
        adamw_step(params, grads, state, step, opt);
        unpack_parameters(params, model);
    }

    const Lut3D residual = reconstruct_residual(model.factors);
    const Lut3D lut = compose_lut(model);
    const ImageBuffer pred = apply_to_image(lut, input, InterpKind::trilinear, false);
    report.final_loss = loss_total(pred, target, lut, residual, cfg.weights).total;
    report.steps = cfg.steps;
    fill_final_metrics(model, input, target, report);
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

}  // namespace lorlut
