#include <csignal>
#include <sstream>
#include <thread>

#include "cli_runner.hpp"
#include "doctest.h"
#include "httplib.h"
#include "lorlut/io.hpp"
#include "test_support.hpp"

using namespace lorlut;
using namespace lorlut::testing;

namespace {

double field(const std::string& output, const std::string& key) {
    std::istringstream in(output);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind(key + " ", 0) == 0) return std::stod(line.substr(key.size() + 1));
    }
    FAIL("no '" << key << "' line in output:\n" << output);
    return 0.0;
}

std::string read_all(const std::string& path) { return read_text_file(path); }

// Random residual under a sin^2 envelope on every axis. With rank * amplitude
// <= 0.4 identity plus residual stays inside [0,1], so .cube export does not clamp.
LorLutModel bump_model(Lcg& g, int grid, int rank, double amplitude) {
    LorLutModel m = identity_model(grid);
    CpFactors f = random_factors(g, grid, rank);
    for (int r = 0; r < rank; ++r) {
        for (auto* vec : {&f[r].u, &f[r].v, &f[r].w}) {
            for (int i = 0; i < grid; ++i) {
                const double s = std::sin(3.14159265358979 * i / (grid - 1));
                (*vec)[static_cast<std::size_t>(i)] *= s * s;
            }
        }
        for (double& c : f[r].c) c = amplitude * g.uniform(-1.0, 1.0);
    }
    m.factors = f;
    return m;
}

}  // namespace

TEST_CASE("apply") {
    ScratchDir dir("lorlut_cli_apply");
    const ImageBuffer img = lcg_image(1000, 23, 17);
    save_image(dir / "in.png", img);
    write_file(dir / "id.lorlut", write_model(identity_model(33)));

    CliResult r = run_cli("apply " + dir / "id.lorlut" + " " + dir / "in.png" + " " + dir / "out.png");
    REQUIRE(r.code == 0);
    CHECK(read_all(dir / "out.png") == read_all(dir / "in.png"));

    r = run_cli("apply " + dir / "id.lorlut" + " " + dir / "in.png" + " " + dir / "out.ppm --reference " + dir / "in.png");
    REQUIRE(r.code == 0);
    CHECK(r.output.find("psnr inf") != std::string::npos);

    Lcg g(1001);
    const LorLutModel m = random_model(g, 9, 0, 3, 0.3);
    write_file(dir / "m.lorlut", write_model(m));
    r = run_cli("apply " + dir / "m.lorlut" + " " + dir / "in.png" + " " + dir / "a.png --scales 0,0,0");
    REQUIRE(r.code == 0);
    CHECK(read_all(dir / "a.png") == read_all(dir / "out.png"));

    r = run_cli("apply " + dir / "m.lorlut" + " " + dir / "in.png" + " " + dir / "b.png --scales 1,1");
    CHECK(r.code == 2);
    CHECK(r.output.find("Usage") != std::string::npos);

    r = run_cli("apply " + dir / "m.lorlut" + " " + dir / "in.png" + " " + dir / "t.png --interp tetrahedral");
    REQUIRE(r.code == 0);
    const ImageBuffer loaded = load_image(dir / "in.png");
    const auto expected = write_image(apply_to_image(compose_lut(m), loaded, InterpKind::tetrahedral), ImageFormat::png);
    CHECK(read_all(dir / "t.png") == std::string(expected.begin(), expected.end()));

    CHECK(run_cli("apply " + dir / "m.lorlut" + " " + dir / "in.png" + " " + dir / "t.png --interp cubic").code == 2);
}

TEST_CASE("fit") {
    ScratchDir dir("lorlut_cli_fit");
    save_image(dir / "in.png", lcg_image(1002, 16, 16));

    CliResult r = run_cli("fit " + dir / "in.png" + " " + dir / "in.png" + " " + dir / "m.lorlut --steps 60");
    REQUIRE(r.code == 0);
    CHECK(field(r.output, "psnr") > 50.0);
    const ModelFile f = parse_model(read_all(dir / "m.lorlut"));
    CHECK(f.model.grid_size == 33);
    CHECK(f.model.rank() == 8);
    CHECK(f.model.basis_count() == 0);
    CHECK(f.meta.at("steps") == "60");
    CHECK(std::filesystem::exists(dir / "m.lorlut.report.json"));

    save_image(dir / "t.png", lcg_image(1003, 16, 16));
    const std::string args = dir / "in.png" + " " + dir / "t.png" + " ";
    REQUIRE(run_cli("fit " + args + dir / "a.lorlut --steps 30 --grid 9 --rank 3 --seed 5").code == 0);
    REQUIRE(run_cli("fit " + args + dir / "b.lorlut --steps 30 --grid 9 --rank 3 --seed 5").code == 0);
    CHECK(read_all(dir / "a.lorlut") == read_all(dir / "b.lorlut"));

    save_image(dir / "small.png", lcg_image(1004, 8, 16));
    r = run_cli("fit " + dir / "in.png" + " " + dir / "small.png" + " " + dir / "c.lorlut --steps 3");
    CHECK(r.code == 1);
    CHECK(r.output.find("error:") != std::string::npos);
}

TEST_CASE("compress") {
    ScratchDir dir("lorlut_cli_compress");
    Lcg g(1005);
    const LorLutModel m = bump_model(g, 17, 4, 0.1);
    write_file(dir / "m.cube", write_cube(compose_lut(m)));
    CliResult r = run_cli("compress " + dir / "m.cube" + " " + dir / "c.lorlut --rank 4");
    REQUIRE(r.code == 0);
    CHECK(field(r.output, "relative_error") < 1e-4);
    CHECK(read_model(read_all(dir / "c.lorlut")).rank() == 4);

    write_file(dir / "id.cube", write_cube(identity_lut(33)));
    r = run_cli("compress " + dir / "id.cube" + " " + dir / "i.lorlut --rank 1");
    REQUIRE(r.code == 0);
    CHECK(field(r.output, "relative_error") < 1e-6);

    r = run_cli("compress " + dir / "id.cube" + " " + dir / "i8.lorlut --rank 8");
    REQUIRE(r.code == 0);
    CHECK(r.output.find("parameters 816 vs 107811\n") != std::string::npos);

    write_file(dir / "bad.cube", std::string("LUT_3D_SIZE 2\n0 0 0\n"));
    CHECK(run_cli("compress " + dir / "bad.cube" + " " + dir / "x.lorlut").code == 1);
}

TEST_CASE("bench") {
    CliResult r = run_cli("bench --resolution 64x32 --grid 9 --rank 4 --repeat 3 --scaling");
    REQUIRE(r.code == 0);
    CHECK(r.output.find("apply 64x32 trilinear") != std::string::npos);
    CHECK(r.output.find("apply 128x32 trilinear") != std::string::npos);
    CHECK(r.output.find("reconstruct G=9 R=4: mean ") != std::string::npos);
    CHECK(r.output.find("scaling ratio ") != std::string::npos);
    CHECK(r.output.find("MP/s") != std::string::npos);

    // generated data is deterministic
    const CliResult again = run_cli("bench --resolution 64x32 --grid 9 --rank 4 --repeat 3 --scaling");
    CHECK(field(again.output, "checksum") == field(r.output, "checksum"));

    const CliResult help = run_cli("bench --help");
    CHECK(help.code == 0);
    CHECK(help.output.find("--repeat INT:POSITIVE [100]") != std::string::npos);
    CHECK(help.output.find("--rank INT:NONNEGATIVE [32]") != std::string::npos);
    CHECK(run_cli("bench --resolution 12by4").code == 2);
}

TEST_CASE("export-cube and inspect") {
    ScratchDir dir("lorlut_cli_export");
    Lcg g(1006);
    const LorLutModel m = bump_model(g, 9, 8, 0.05);
    write_file(dir / "m.lorlut", write_model(m));

    REQUIRE(run_cli("export-cube " + dir / "m.lorlut" + " " + dir / "zero.cube --scales 0,0,0,0,0,0,0,0").code == 0);
    CHECK(read_all(dir / "zero.cube") == write_cube(identity_lut(9)));
    CHECK(run_cli("export-cube " + dir / "m.lorlut" + " " + dir / "z.cube --scales 0").code == 2);

    REQUIRE(run_cli("export-cube " + dir / "m.lorlut" + " " + dir / "m.cube").code == 0);
    const Lut3D via_cube = read_cube(read_all(dir / "m.cube"));
    const Lut3D direct = compose_lut(m);
    const ImageBuffer img = lcg_image(1007, 20, 20);
    const ImageBuffer a = apply_to_image(via_cube, img);
    const ImageBuffer b = apply_to_image(direct, img);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (int ch = 0; ch < 3; ++ch) worst = std::max(worst, std::abs(a.pixels()[i][ch] - b.pixels()[i][ch]));
    }
    CHECK(worst <= 1e-6);

    const CliResult r = run_cli("inspect " + dir / "m.lorlut");
    REQUIRE(r.code == 0);
    std::istringstream in(r.output);
    std::string line;
    int components = 0, curves = 0;
    while (std::getline(in, line)) {
        if (line.rfind("component ", 0) == 0) ++components;
        for (const char* axis : {"  u ", "  v ", "  w "}) {
            if (line.rfind(axis, 0) == 0) {
                std::istringstream vals(line.substr(4));
                int n = 0;
                double x;
                while (vals >> x) ++n;
                CHECK(n == 9);
                ++curves;
            }
        }
    }
    CHECK(components == 8);
    CHECK(curves == 24);
    CHECK(field(r.output, "rank") == 8);
    CHECK(run_cli("inspect " + dir / "m.lorlut").output == r.output);
    CHECK(run_cli("inspect " + dir / "missing.lorlut").code == 1);
}

TEST_CASE("usage errors") {
    CHECK(run_cli("").code == 2);
    CHECK(run_cli("frobnicate").code == 2);
    CHECK(run_cli("apply onlyone").code == 2);
    CHECK(run_cli("fit a b c --rank -1").code == 2);
    CHECK(run_cli("--help").code == 0);
    CHECK(run_cli("--version").code == 0);
}

TEST_CASE("serve") {
    ScratchDir dir("lorlut_cli_serve");
    Lcg g(1008);
    write_file(dir / "m.lorlut", write_model(random_model(g, 9, 0, 5, 0.3)));
    const std::string cmd = "sh -c " + shell_quote("echo $$; exec " + shell_quote(LORLUT_CLI_PATH) + " serve " +
                                                   shell_quote(dir / "m.lorlut") + " --port 0 --max-sessions 1");
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[512];
    REQUIRE(std::fgets(buf, sizeof buf, pipe) != nullptr);
    const pid_t pid = static_cast<pid_t>(std::stol(buf));
    REQUIRE(std::fgets(buf, sizeof buf, pipe) != nullptr);
    const std::string banner = buf;
    CHECK(banner.find("G=9") != std::string::npos);
    CHECK(banner.find("R=5") != std::string::npos);
    const auto colon = banner.rfind(':', banner.find(" (model"));
    const int port = std::stoi(banner.substr(colon + 1));

    httplib::Client c("127.0.0.1", port);
    auto health = c.Get("/v1/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    CHECK(health->body.find("\"ok\"") != std::string::npos);
    const auto png = write_image(lcg_image(1009, 4, 4), ImageFormat::png);
    const std::string body(png.begin(), png.end());
    CHECK(c.Post("/v1/sessions", body, "image/png")->status == 201);
    CHECK(c.Post("/v1/sessions", body, "image/png")->status == 429);

    ::kill(pid, SIGTERM);
    const int status = ::pclose(pipe);
    CHECK(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == 0);

    // port already taken
    httplib::Server blocker;
    const int taken = blocker.bind_to_any_port("127.0.0.1");
    const CliResult busy = run_cli("serve --port " + std::to_string(taken));
    CHECK(busy.code == 1);
}
