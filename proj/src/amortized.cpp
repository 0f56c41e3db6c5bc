#include "lorlut/amortized.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace lorlut {

std::vector<double> extract_global_features(const ImageBuffer& img) {
    if (img.empty()) throw RangeError("extract_global_features: empty image");
    const auto px = img.pixels();
    const double n = static_cast<double>(px.size());
    std::vector<double> feat(kFeatureCount, 0.0);

    double mean[3] = {0.0, 0.0, 0.0};
    for (const Rgb& raw : px) {
        const Rgb p = clamp01(raw);
        for (int ch = 0; ch < 3; ++ch) {
            const int bin = std::min(static_cast<int>(p[ch] * kHistogramBins), kHistogramBins - 1);
            feat[static_cast<std::size_t>(ch * kHistogramBins + bin)] += 1.0;
            mean[ch] += p[ch];
        }
    }
    for (int b = 0; b < 3 * kHistogramBins; ++b) feat[static_cast<std::size_t>(b)] /= n;
    for (double& m : mean) m /= n;

    double cov[3][3] = {};
    for (const Rgb& raw : px) {
        const Rgb p = clamp01(raw);
        const double d[3] = {p.r - mean[0], p.g - mean[1], p.b - mean[2]};
        for (int a = 0; a < 3; ++a) {
            for (int b = a; b < 3; ++b) cov[a][b] += d[a] * d[b];
        }
    }
    const std::size_t base = 3 * kHistogramBins;
    double sd[3];
    for (int ch = 0; ch < 3; ++ch) {
        sd[ch] = std::sqrt(cov[ch][ch] / n);
        feat[base + static_cast<std::size_t>(ch)] = mean[ch];
        feat[base + 3 + static_cast<std::size_t>(ch)] = sd[ch];
    }
    const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
    for (int q = 0; q < 3; ++q) {
        const int a = pairs[q][0], b = pairs[q][1];
        const double denom = sd[a] * sd[b];
        feat[base + 6 + static_cast<std::size_t>(q)] = denom > 0.0 ? std::clamp(cov[a][b] / n / denom, -1.0, 1.0) : 0.0;
    }
    return feat;
}

std::vector<double> PredictorWeights::pack() const {
    std::vector<double> flat;
    flat.insert(flat.end(), w1.begin(), w1.end());
    flat.insert(flat.end(), b1.begin(), b1.end());
    flat.insert(flat.end(), w2.begin(), w2.end());
    flat.insert(flat.end(), b2.begin(), b2.end());
    for (const Lut3D& b : bases) {
        for (const Rgb& e : b.entries()) flat.insert(flat.end(), {e.r, e.g, e.b});
    }
    return flat;
}

void PredictorWeights::unpack(std::span<const double> flat) {
    std::size_t expected = w1.size() + b1.size() + w2.size() + b2.size();
    for (const Lut3D& b : bases) expected += 3 * b.size();
    if (flat.size() != expected) throw DimensionError("predictor parameter vector has the wrong length");
    auto it = flat.begin();
    for (auto* vec : {&w1, &b1, &w2, &b2}) {
        for (double& x : *vec) x = *it++;
    }
    for (Lut3D& b : bases) {
        for (Rgb& e : b.entries()) {
            e.r = *it++;
            e.g = *it++;
            e.b = *it++;
        }
    }
}

PredictorWeights init_predictor(int grid_size, int basis_count, int rank, int hidden, std::uint64_t seed) {
    if (hidden < 1) throw RangeError("predictor hidden width must be >= 1");
    if (grid_size < 2 || basis_count < 0 || rank < 0) throw RangeError("invalid predictor shape");
    PredictorWeights p;
    p.grid_size = grid_size;
    p.basis_count = basis_count;
    p.rank = rank;
    p.hidden = hidden;
    const auto outputs = static_cast<std::size_t>(p.output_count());
    const auto h = static_cast<std::size_t>(hidden);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> in_dist(0.0, 1.0 / std::sqrt(static_cast<double>(kFeatureCount)));
    p.w1.resize(h * kFeatureCount);
    for (double& x : p.w1) x = in_dist(rng);
    p.b1.assign(h, 0.0);
    p.w2.assign(outputs * h, 0.0);
    p.b2.assign(outputs, 0.0);

    std::normal_distribution<double> factor_dist(0.0, 1.0 / std::sqrt(static_cast<double>(grid_size)));
    const auto g = static_cast<std::size_t>(grid_size);
    for (int r = 0; r < rank; ++r) {
        const std::size_t off = static_cast<std::size_t>(basis_count) + static_cast<std::size_t>(r) * (3 * g + 3);
        for (std::size_t q = 0; q < 3 * g; ++q) p.b2[off + q] = factor_dist(rng);
    }
    for (int k = 0; k < basis_count; ++k) p.bases.push_back(identity_lut(grid_size));
    return p;
}

namespace {

struct Activations {
    std::vector<double> features;
    std::vector<double> hidden;  // post-tanh
    std::vector<double> outputs;
};

Activations run(const PredictorWeights& p, const ImageBuffer& img) {
    Activations a;
    a.features = extract_global_features(img);
    const auto h = static_cast<std::size_t>(p.hidden);
    a.hidden.resize(h);
    for (std::size_t i = 0; i < h; ++i) {
        double s = p.b1[i];
        for (std::size_t f = 0; f < kFeatureCount; ++f) s += p.w1[i * kFeatureCount + f] * a.features[f];
        a.hidden[i] = std::tanh(s);
    }
    const auto outs = static_cast<std::size_t>(p.output_count());
    a.outputs.resize(outs);
    for (std::size_t o = 0; o < outs; ++o) {
        double s = p.b2[o];
        for (std::size_t i = 0; i < h; ++i) s += p.w2[o * h + i] * a.hidden[i];
        a.outputs[o] = s;
    }
    return a;
}

LorLutModel to_model(const PredictorWeights& p, const std::vector<double>& outputs) {
    LorLutModel m;
    m.grid_size = p.grid_size;
    m.bases = p.bases;
    m.alphas.assign(static_cast<std::size_t>(p.basis_count), 0.0);
    m.factors = CpFactors(p.grid_size, p.rank);
    unpack_parameters(outputs, m);
    for (int k = 0; k < p.basis_count; ++k) m.alphas[static_cast<std::size_t>(k)] += 1.0 / p.basis_count;
    return m;
}

}  // namespace

LorLutModel predictor_forward(const PredictorWeights& p, const ImageBuffer& img) {
    return to_model(p, run(p, img).outputs);
}

PairLoss predictor_loss_and_gradient(const PredictorWeights& p,
                                     std::span<const std::pair<ImageBuffer, ImageBuffer>> pairs,
                                     const LossWeights& w) {
    if (pairs.empty()) throw RangeError("predictor loss needs at least one image pair");
    const auto h = static_cast<std::size_t>(p.hidden);
    const auto outs = static_cast<std::size_t>(p.output_count());
    std::vector<double> gw1(p.w1.size(), 0.0), gb1(h, 0.0), gw2(p.w2.size(), 0.0), gb2(outs, 0.0);
    std::vector<Lut3D> gbases;
    for (const Lut3D& b : p.bases) gbases.emplace_back(b.grid_size());

    PairLoss out;
    const double inv = 1.0 / static_cast<double>(pairs.size());
    for (const auto& [input, target] : pairs) {
        const Activations a = run(p, input);
        const LorLutModel model = to_model(p, a.outputs);
        const LossAndGradients lg = evaluate(input, target, model, w);
        out.total += inv * lg.loss.total;

        // d loss / d outputs: alpha offset has unit derivative.
        const std::vector<double> d_out = pack_gradients(lg.grads);
        std::vector<double> d_hidden(h, 0.0);
        for (std::size_t o = 0; o < outs; ++o) {
            const double g = inv * d_out[o];
            gb2[o] += g;
            for (std::size_t i = 0; i < h; ++i) {
                gw2[o * h + i] += g * a.hidden[i];
                d_hidden[i] += g * p.w2[o * h + i];
            }
        }
        for (std::size_t i = 0; i < h; ++i) {
            const double d_pre = d_hidden[i] * (1.0 - a.hidden[i] * a.hidden[i]);
            gb1[i] += d_pre;
            for (std::size_t f = 0; f < kFeatureCount; ++f) gw1[i * kFeatureCount + f] += d_pre * a.features[f];
        }
        for (std::size_t k = 0; k < gbases.size(); ++k) {
            const auto dst = gbases[k].entries();
            const auto src = lg.grads.bases[k].entries();
            for (std::size_t e = 0; e < dst.size(); ++e) dst[e] += inv * src[e];
        }
    }
    for (auto* vec : {&gw1, &gb1, &gw2, &gb2}) out.grads.insert(out.grads.end(), vec->begin(), vec->end());
    for (const Lut3D& b : gbases) {
        for (const Rgb& e : b.entries()) out.grads.insert(out.grads.end(), {e.r, e.g, e.b});
    }
    return out;
}

AmortizedResult train_amortized(std::span<const std::pair<ImageBuffer, ImageBuffer>> pairs, const FitConfig& cfg,
                                int hidden) {
    cfg.validate();
    if (pairs.size() < 2) throw RangeError("train_amortized needs at least two image pairs");
    for (const auto& [input, target] : pairs) require_same_shape(input, target, "train_amortized");

    AmortizedResult result{init_predictor(cfg.grid_size, cfg.basis_count, cfg.rank, hidden, cfg.seed), {}};
    const AdamWConfig opt = cfg.optimizer();
    AdamWState state;
    std::vector<double> params = result.weights.pack();
    for (int step = 1; step <= cfg.steps; ++step) {
        const PairLoss pl = predictor_loss_and_gradient(result.weights, pairs, cfg.weights);
        if (!std::isfinite(pl.total)) {
            throw NumericError("train_amortized: loss became non-finite at step " + std::to_string(step));
        }
        result.loss_trace.push_back(pl.total);
        adamw_step(params, pl.grads, state, step, opt);
        result.weights.unpack(params);
    }
    return result;
}

}  // namespace lorlut
