#include "lorlut/cp_als.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

namespace lorlut {
namespace {

using Matrix = Eigen::MatrixXd;

// Factor matrices: color (3 x R), u/v/w (G x R).
struct Blocks {
    Matrix c, u, v, w;
};

enum class Mode { u, v, w, c };

// Matricized tensor times Khatri-Rao product of the other three blocks.
Matrix mttkrp(const Lut3D& x, const Blocks& f, Mode mode) {
    const int g = x.grid_size();
    const int rank = static_cast<int>(f.u.cols());
    Matrix out = Matrix::Zero(mode == Mode::c ? 3 : g, rank);
    for (int r = 0; r < rank; ++r) {
        for (int k = 0; k < g; ++k) {
            for (int j = 0; j < g; ++j) {
                for (int i = 0; i < g; ++i) {
                    const Rgb& e = x.at(i, j, k);
                    switch (mode) {
                        case Mode::u:
                            out(i, r) += (e.r * f.c(0, r) + e.g * f.c(1, r) + e.b * f.c(2, r)) * f.v(j, r) * f.w(k, r);
                            break;
                        case Mode::v:
                            out(j, r) += (e.r * f.c(0, r) + e.g * f.c(1, r) + e.b * f.c(2, r)) * f.u(i, r) * f.w(k, r);
                            break;
                        case Mode::w:
                            out(k, r) += (e.r * f.c(0, r) + e.g * f.c(1, r) + e.b * f.c(2, r)) * f.u(i, r) * f.v(j, r);
                            break;
                        case Mode::c: {
                            const double t = f.u(i, r) * f.v(j, r) * f.w(k, r);
                            out(0, r) += e.r * t;
                            out(1, r) += e.g * t;
                            out(2, r) += e.b * t;
                            break;
                        }
                    }
                }
            }
        }
    }
    return out;
}

CpFactors to_factors(const Blocks& f, int g) {
    const int rank = static_cast<int>(f.u.cols());
    CpFactors out(g, rank);
    for (int r = 0; r < rank; ++r) {
        CpComponent& comp = out[r];
        for (int i = 0; i < g; ++i) {
            comp.u[static_cast<std::size_t>(i)] = f.u(i, r);
            comp.v[static_cast<std::size_t>(i)] = f.v(i, r);
            comp.w[static_cast<std::size_t>(i)] = f.w(i, r);
        }
        for (int ch = 0; ch < 3; ++ch) comp.c[static_cast<std::size_t>(ch)] = f.c(ch, r);
    }
    return out;
}

double frobenius(const Lut3D& x) {
    double s = 0.0;
    for (const Rgb& e : x.entries()) s += e.r * e.r + e.g * e.g + e.b * e.b;
    return std::sqrt(s);
}

double relative_error(const Lut3D& x, const Blocks& f, double x_norm) {
    const Lut3D approx = reconstruct_residual(to_factors(f, x.grid_size()));
    double s = 0.0;
    const auto a = x.entries();
    const auto b = approx.entries();
    for (std::size_t e = 0; e < a.size(); ++e) {
        const Rgb d = a[e] - b[e];
        s += d.r * d.r + d.g * d.g + d.b * d.b;
    }
    return std::sqrt(s) / x_norm;
}

void normalize(Blocks& f) {
    for (Eigen::Index r = 0; r < f.u.cols(); ++r) {
        double scale = 1.0;
        for (Matrix* m : {&f.u, &f.v, &f.w}) {
            const double n = m->col(r).norm();
            if (n > 0.0) {
                m->col(r) /= n;
                scale *= n;
            } else {
                scale = 0.0;
            }
        }
        f.c.col(r) *= scale;
    }
}

}  // namespace

Lut3D residual_against_identity(const Lut3D& lut) {
    Lut3D out = identity_lut(lut.grid_size());
    const auto dst = out.entries();
    const auto src = lut.entries();
    for (std::size_t e = 0; e < dst.size(); ++e) dst[e] = src[e] - dst[e];
    return out;
}

CpAlsResult cp_als_compress(const Lut3D& residual, int rank, const CpAlsOptions& opts) {
    if (rank < 1) throw RangeError("cp_als_compress: rank must be >= 1");
    if (opts.max_iters < 1) throw RangeError("cp_als_compress: max_iters must be >= 1");
    if (!(opts.tol >= 0.0) || !(opts.ridge >= 0.0)) throw RangeError("cp_als_compress: tol and ridge must be >= 0");
    if (opts.starts < 1 || opts.stall_window < 0 || !(opts.stall_drop >= 0.0 && opts.stall_drop < 1.0)) {
        throw RangeError("cp_als_compress: need starts >= 1, stall_window >= 0 and stall_drop in [0, 1)");
    }
    if (!residual.all_finite()) throw NumericError("cp_als_compress: input tensor has non-finite entries");
    const int g = residual.grid_size();

    CpAlsResult result;
    const double x_norm = frobenius(residual);
    if (x_norm == 0.0) {
        result.factors = CpFactors(g, rank);
        const double unit = 1.0 / std::sqrt(static_cast<double>(g));
        for (int r = 0; r < rank; ++r) {
            for (auto* vec : {&result.factors[r].u, &result.factors[r].v, &result.factors[r].w}) {
                for (double& x : *vec) x = unit;
            }
        }
        return result;
    }

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto random_matrix = [&](int rows) {
        Matrix m(rows, rank);
        for (int r = 0; r < rank; ++r) {
            for (int i = 0; i < rows; ++i) m(i, r) = normal(rng);
        }
        return m;
    };

    auto solve = [&](const Blocks& f, Mode mode, Matrix& target, const Matrix& a, const Matrix& b, const Matrix& c) {
        Matrix gram = (a.transpose() * a).cwiseProduct(b.transpose() * b).cwiseProduct(c.transpose() * c);
        gram.diagonal().array() += opts.ridge;
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
        const double lo = eig.eigenvalues().minCoeff();
        const double hi = eig.eigenvalues().maxCoeff();
        if (!(lo > hi * 1e-13)) {
            result.ill_conditioned = true;
            result.warning = "Gram matrix near singular (condition > 1e13); rank " + std::to_string(rank) +
                             " is more than the data supports";
        }
        const Matrix m = mttkrp(residual, f, mode);
        target = gram.ldlt().solve(m.transpose()).transpose();
    };

    struct Run {
        Blocks f;
        std::vector<double> history;
        double err = std::numeric_limits<double>::infinity();
    };
    std::optional<Run> best;
    int budget = opts.max_iters;

    for (int start = 0; start < opts.starts && budget > 0; ++start) {
        const bool last = start + 1 == opts.starts;
        Run run;
        run.f = Blocks{random_matrix(3), random_matrix(g), random_matrix(g), random_matrix(g)};
        normalize(run.f);
        Blocks& f = run.f;
        Blocks accepted = f;
        double prev = std::numeric_limits<double>::infinity();
        bool converged = false;
        for (int it = 1; budget > 0; ++it) {
            --budget;
            ++result.iterations;
            solve(f, Mode::u, f.u, f.c, f.v, f.w);
            solve(f, Mode::v, f.v, f.c, f.u, f.w);
            solve(f, Mode::w, f.w, f.c, f.u, f.v);
            solve(f, Mode::c, f.c, f.u, f.v, f.w);
            normalize(f);

            double err = relative_error(residual, f, x_norm);
            // extrapolate along the last update to escape swamps; kept only if it helps
            if (opts.line_search && it > 2 && std::isfinite(err)) {
                const double step = std::cbrt(static_cast<double>(it));
                Blocks jump{accepted.c + step * (f.c - accepted.c), accepted.u + step * (f.u - accepted.u),
                            accepted.v + step * (f.v - accepted.v), accepted.w + step * (f.w - accepted.w)};
                normalize(jump);
                const double jump_err = relative_error(residual, jump, x_norm);
                if (jump_err < err) {
                    f = std::move(jump);
                    err = jump_err;
                }
            }
            // at the rounding floor a sweep can come out marginally worse; keep the previous iterate
            if (err > prev) {
                f = accepted;
                converged = true;
                break;
            }
            if (!std::isfinite(err)) {
                result.ill_conditioned = true;
                result.warning = "least-squares sweep produced non-finite factors";
                f = accepted;
                break;
            }
            run.history.push_back(err);
            run.err = err;
            accepted = f;
            if (err == 0.0 || (prev - err) < opts.tol * prev) {
                converged = true;
                break;
            }
            prev = err;
            const std::size_t n = run.history.size();
            const auto window = static_cast<std::size_t>(opts.stall_window);
            if (!last && window > 0 && n > window &&
                run.history[n - 1] > (1.0 - opts.stall_drop) * run.history[n - 1 - window]) {
                break;
            }
        }
        if (!best || run.err < best->err) best = std::move(run);
        ++result.starts;
        if (converged) break;
    }

    const Blocks& f = best->f;
    result.history = best->history;
    result.relative_error = best->history.empty() ? relative_error(residual, f, x_norm) : best->err;
    result.factors = to_factors(f, g);
    return result;
}

}  // namespace lorlut
