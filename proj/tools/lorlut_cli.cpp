// lorlut command-line tool.

#include <chrono>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <random>

#include "CLI11.hpp"
#include "lorlut/cp_als.hpp"
#include "lorlut/io.hpp"
#include "lorlut/metrics.hpp"
#include "lorlut/optim.hpp"
#include "lorlut/parallel.hpp"
#include "lorlut/service.hpp"
#include "lorlut/version.hpp"

using namespace lorlut;

namespace {

// Bad flag combinations found after parsing; exit code 2 like parse errors.
struct UsageError : Error {
    using Error::Error;
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

bool is_model_text(std::string_view text) { return text.starts_with("lorlut-model"); }

ComponentScales scales_for(const std::vector<double>& given, int rank) {
    if (given.empty()) return ComponentScales::ones(rank);
    if (static_cast<int>(given.size()) != rank) {
        throw UsageError("--scales has " + std::to_string(given.size()) + " values but the model has rank " +
                         std::to_string(rank));
    }
    return ComponentScales{given};
}

struct ApplyArgs {
    std::string source, input, output, reference, interp = "trilinear";
    std::vector<double> scales;
};

int run_apply(const ApplyArgs& a) {
    const std::string text = read_text_file(a.source);
    Lut3D lut;
    if (is_model_text(text)) {
        const LorLutModel m = read_model(text);
        lut = compose_lut(m, scales_for(a.scales, m.rank()));
    } else {
        if (!a.scales.empty()) throw UsageError("--scales only applies to model files");
        lut = read_cube(text);
    }
    const InterpKind kind = a.interp == "tetrahedral" ? InterpKind::tetrahedral : InterpKind::trilinear;
    const ImageBuffer out = apply_to_image(lut, load_image(a.input), kind, true);
    save_image(a.output, out);
    if (!a.reference.empty()) {
        // compare what was written, after 8-bit quantization
        const ImageBuffer written = load_image(a.output);
        std::cout << "psnr " << num(psnr(written, load_image(a.reference))) << "\n";
    }
    return 0;
}

struct FitArgs {
    std::string input, target, output;
    FitConfig cfg;
};

int run_fit(FitArgs a) {
    const ImageBuffer input = load_image(a.input);
    const ImageBuffer target = load_image(a.target);
    const FitResult r = fit_image_pair(input, target, a.cfg);
    write_file(a.output, write_model(r.model, &r.report));
    write_file(a.output + ".report.json", report_to_json(r.report));
    std::cout << "steps " << r.report.steps << "\n";
    std::cout << "final_loss " << num(r.report.final_loss) << "\n";
    std::cout << "psnr " << num(r.report.psnr) << "\n";
    std::cout << "ssim " << (r.report.ssim ? num(*r.report.ssim) : std::string("n/a")) << "\n";
    std::cout << "delta_e00 " << num(r.report.mean_delta_e) << "\n";
    return 0;
}

struct CompressArgs {
    std::string cube, output;
    int rank = 8;
    CpAlsOptions opts;
};

int run_compress(const CompressArgs& a) {
    const Lut3D lut = read_cube(read_text_file(a.cube));
    const CpAlsResult res = cp_als_compress(residual_against_identity(lut), a.rank, a.opts);
    LorLutModel m = identity_model(lut.grid_size());
    m.factors = res.factors;
    write_file(a.output, write_model(m));
    const int g = lut.grid_size();
    std::cout << "relative_error " << num(res.relative_error) << "\n";
    std::cout << "iterations " << res.iterations << "\n";
    std::cout << "starts " << res.starts << "\n";
    std::cout << "parameters " << residual_param_count(g, a.rank) << " vs " << dense_param_count(g) << "\n";
    if (res.ill_conditioned) std::cerr << "warning: " << res.warning << "\n";
    return 0;
}

struct BenchArgs {
    std::string resolution = "1920x1080", interp = "trilinear";
    int grid = 33, rank = 32, repeat = 100, threads = 0;
    bool scaling = false;
};

struct Timing {
    double mean_ms = 0.0, stddev_ms = 0.0;
};

template <class F>
Timing time_repeats(int repeat, F&& body) {
    std::vector<double> ms;
    for (int i = 0; i < repeat; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        body();
        ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    }
    const double mean = std::accumulate(ms.begin(), ms.end(), 0.0) / repeat;
    double var = 0.0;
    for (double x : ms) var += (x - mean) * (x - mean);
    return {mean, std::sqrt(var / repeat)};
}

ImageBuffer noise_image(int w, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ImageBuffer img(w, h, Rgb{});
    for (Rgb& p : img.pixels()) p = Rgb{u(rng), u(rng), u(rng)};
    return img;
}

int run_bench(const BenchArgs& a) {
    int w = 0, h = 0;
    char tail = 0;
    if (std::sscanf(a.resolution.c_str(), "%dx%d%c", &w, &h, &tail) != 2 || w < 1 || h < 1) {
        throw UsageError("--resolution must look like 1920x1080");
    }
    if (a.threads > 0) set_thread_count(a.threads);
    const InterpKind kind = a.interp == "tetrahedral" ? InterpKind::tetrahedral : InterpKind::trilinear;

    std::mt19937_64 rng(1);
    std::normal_distribution<double> normal(0.0, 0.05);
    CpFactors f(a.grid, a.rank);
    for (int r = 0; r < a.rank; ++r) {
        for (auto* vec : {&f[r].u, &f[r].v, &f[r].w}) {
            for (double& x : *vec) x = 1.0 + normal(rng);
        }
        for (double& c : f[r].c) c = normal(rng) * 0.1;
    }
    const Timing recon = time_repeats(a.repeat, [&] { (void)reconstruct_residual(f); });
    LorLutModel m = identity_model(a.grid);
    m.factors = f;
    const Lut3D lut = compose_lut(m);

    double checksum = 0.0;
    auto bench_apply = [&](int width) {
        const ImageBuffer img = noise_image(width, h, 2);
        ImageBuffer out;
        const Timing t = time_repeats(a.repeat, [&] { out = apply_to_image(lut, img, kind, true); });
        checksum = 0.0;
        for (const Rgb& p : out.pixels()) checksum += p.r + p.g + p.b;
        const double mp = static_cast<double>(width) * h / 1e6;
        std::cout << "apply " << width << "x" << h << " " << a.interp << " threads " << thread_count() << ": mean "
                  << num(t.mean_ms) << " ms, stddev " << num(t.stddev_ms) << " ms, " << num(mp / (t.mean_ms / 1e3))
                  << " MP/s\n";
        return t.mean_ms;
    };
    const double base = bench_apply(w);
    std::cout << "reconstruct G=" << a.grid << " R=" << a.rank << ": mean " << num(recon.mean_ms) << " ms, stddev "
              << num(recon.stddev_ms) << " ms\n";
    if (a.scaling) {
        const double doubled = bench_apply(2 * w);
        std::cout << "scaling ratio " << num(doubled / base) << "\n";
    }
    std::cout << "checksum " << num(checksum) << "\n";
    return 0;
}

struct ExportArgs {
    std::string model, output, title = "lorlut";
    std::vector<double> scales;
};

int run_export(const ExportArgs& a) {
    const LorLutModel m = read_model(read_text_file(a.model));
    write_file(a.output, write_cube(compose_lut(m, scales_for(a.scales, m.rank())), a.title));
    return 0;
}

void print_curve(const char* name, const std::vector<double>& v) {
    std::cout << "  " << name;
    for (double x : v) std::cout << " " << num(x);
    std::cout << "\n";
}

int run_inspect(const std::string& path) {
    const ModelFile file = parse_model(read_text_file(path));
    const LorLutModel& m = file.model;
    std::cout << "grid " << m.grid_size << "\nbases " << m.basis_count() << "\nrank " << m.rank() << "\n";
    std::cout << "alphas";
    for (double a : m.alphas) std::cout << " " << num(a);
    std::cout << "\n";
    const ParamBreakdown p = total_param_count(m.grid_size, m.basis_count(), m.rank());
    std::cout << "parameters " << p.total << "\n";
    for (int r = 0; r < m.rank(); ++r) {
        const ComponentCurves cc = component_curves(m.factors, r);
        std::cout << "component " << r << "\n";
        std::cout << "  c " << num(cc.c[0]) << " " << num(cc.c[1]) << " " << num(cc.c[2]) << "\n";
        std::cout << "  magnitude " << num(cc.magnitude) << "\n";
        print_curve("u", cc.u);
        print_curve("v", cc.v);
        print_curve("w", cc.w);
    }
    for (const auto& [k, v] : file.meta) std::cout << "meta " << k << " " << v << "\n";
    return 0;
}

struct ServeArgs {
    std::string host = "127.0.0.1", model;
    int port = 8080, max_sessions = 16, ttl_minutes = 30, max_fit_steps = 2000;
};

Service* g_service = nullptr;

extern "C" void on_signal(int) {
    if (g_service) g_service->stop();
}

int run_serve(const ServeArgs& a) {
    ServiceConfig cfg;
    cfg.max_sessions = a.max_sessions;
    cfg.ttl = std::chrono::minutes(a.ttl_minutes);
    cfg.max_fit_steps = a.max_fit_steps;
    if (!a.model.empty()) cfg.default_model = read_model(read_text_file(a.model));
    const LorLutModel shown = cfg.default_model ? *cfg.default_model : identity_model(33);

    Service svc(cfg);
    const int port = svc.bind(a.host, a.port);
    if (port < 0) {
        std::cerr << "error: cannot bind " << a.host << ":" << a.port << "\n";
        return 1;
    }
    g_service = &svc;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << "lorlut " << kVersion << " serving on http://" << a.host << ":" << port << " (model G=" << shown.grid_size
              << " K=" << shown.basis_count() << " R=" << shown.rank() << ", max sessions " << a.max_sessions << ")"
              << std::endl;
    svc.run();
    g_service = nullptr;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Low-rank 3D LUT toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));
    const std::vector<std::string> interps{"trilinear", "tetrahedral"};

    ApplyArgs apply;
    auto* c_apply = app.add_subcommand("apply", "Apply a model or .cube LUT to an image");
    c_apply->add_option("source", apply.source, "Model file or .cube")->required();
    c_apply->add_option("input", apply.input, "Input image (.png/.ppm)")->required();
    c_apply->add_option("output", apply.output, "Output image (.png/.ppm)")->required();
    c_apply->add_option("--scales", apply.scales, "Per-component scales s1,..,sR")->delimiter(',');
    c_apply->add_option("--interp", apply.interp, "Interpolation")->check(CLI::IsMember(interps));
    c_apply->add_option("--reference", apply.reference, "Print PSNR against this image");

    FitArgs fit;
    auto* c_fit = app.add_subcommand("fit", "Fit a model to an input/target image pair");
    c_fit->add_option("input", fit.input)->required();
    c_fit->add_option("target", fit.target)->required();
    c_fit->add_option("output", fit.output, "Model file to write")->required();
    c_fit->add_option("--rank", fit.cfg.rank)->capture_default_str()->check(CLI::NonNegativeNumber);
    c_fit->add_option("--bases", fit.cfg.basis_count)->capture_default_str()->check(CLI::NonNegativeNumber);
    c_fit->add_option("--grid", fit.cfg.grid_size)->capture_default_str()->check(CLI::Range(2, 129));
    c_fit->add_option("--steps", fit.cfg.steps)->capture_default_str()->check(CLI::PositiveNumber);
    c_fit->add_option("--seed", fit.cfg.seed)->capture_default_str();
    c_fit->add_option("--lr", fit.cfg.base_lr)->capture_default_str()->check(CLI::PositiveNumber);
    c_fit->add_option("--lambda-l1", fit.cfg.weights.reconstruction)->capture_default_str();
    c_fit->add_option("--lambda-de", fit.cfg.weights.delta_e)->capture_default_str();
    c_fit->add_option("--lambda-tv", fit.cfg.weights.smoothness)->capture_default_str();
    c_fit->add_option("--lambda-l2", fit.cfg.weights.residual)->capture_default_str();
    c_fit->add_option("--log-every", fit.cfg.log_every)->capture_default_str()->check(CLI::PositiveNumber);

    CompressArgs compress;
    auto* c_compress = app.add_subcommand("compress", "Compress a .cube into a rank-R model");
    c_compress->add_option("cube", compress.cube)->required();
    c_compress->add_option("output", compress.output, "Model file to write")->required();
    c_compress->add_option("--rank", compress.rank)->capture_default_str()->check(CLI::PositiveNumber);
    c_compress->add_option("--max-iters", compress.opts.max_iters)->capture_default_str()->check(CLI::PositiveNumber);
    c_compress->add_option("--tol", compress.opts.tol)->capture_default_str()->check(CLI::NonNegativeNumber);
    c_compress->add_option("--starts", compress.opts.starts)
        ->capture_default_str()
        ->check(CLI::PositiveNumber);

    BenchArgs bench;
    auto* c_bench = app.add_subcommand("bench", "Time residual reconstruction and LUT application");
    c_bench->add_option("--resolution", bench.resolution)->capture_default_str();
    c_bench->add_option("--grid", bench.grid)->capture_default_str()->check(CLI::Range(2, 129));
    c_bench->add_option("--rank", bench.rank)->capture_default_str()->check(CLI::NonNegativeNumber);
    c_bench->add_option("--interp", bench.interp)->capture_default_str()->check(CLI::IsMember(interps));
    c_bench->add_option("--repeat", bench.repeat)->capture_default_str()->check(CLI::PositiveNumber);
    c_bench->add_option("--threads", bench.threads, "0 = LORLUT_THREADS or all cores")->capture_default_str();
    c_bench->add_flag("--scaling", bench.scaling, "Also time twice the pixel count and print the ratio");

    ExportArgs exp;
    auto* c_export = app.add_subcommand("export-cube", "Compose a model and write a .cube");
    c_export->add_option("model", exp.model)->required();
    c_export->add_option("output", exp.output)->required();
    c_export->add_option("--scales", exp.scales)->delimiter(',');
    c_export->add_option("--title", exp.title)->capture_default_str();

    std::string inspect_path;
    auto* c_inspect = app.add_subcommand("inspect", "Print model structure and factor curves");
    c_inspect->add_option("model", inspect_path)->required();

    ServeArgs serve;
    auto* c_serve = app.add_subcommand("serve", "Run the viewer HTTP API");
    c_serve->add_option("model", serve.model, "Default model for new sessions");
    c_serve->add_option("--host", serve.host)->capture_default_str();
    c_serve->add_option("--port", serve.port)->capture_default_str()->check(CLI::Range(0, 65535));
    c_serve->add_option("--max-sessions", serve.max_sessions)->capture_default_str()->check(CLI::PositiveNumber);
    c_serve->add_option("--ttl-minutes", serve.ttl_minutes)->capture_default_str()->check(CLI::PositiveNumber);
    c_serve->add_option("--max-fit-steps", serve.max_fit_steps)->capture_default_str()->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*c_apply) return run_apply(apply);
        if (*c_fit) return run_fit(fit);
        if (*c_compress) return run_compress(compress);
        if (*c_bench) return run_bench(bench);
        if (*c_export) return run_export(exp);
        if (*c_inspect) return run_inspect(inspect_path);
        if (*c_serve) return run_serve(serve);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n" << app.help();
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
