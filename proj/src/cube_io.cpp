#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <sstream>
#include <string>

#include "lorlut/io.hpp"

namespace lorlut {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

bool parse_double(std::string_view tok, double& out) {
    const char* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

std::array<double, 3> parse_triple(const std::vector<std::string_view>& toks, int line_no, const char* what) {
    std::array<double, 3> v{};
    if (toks.size() != 4 || !parse_double(toks[1], v[0]) || !parse_double(toks[2], v[1]) ||
        !parse_double(toks[3], v[2])) {
        throw FormatError(std::string("line ") + std::to_string(line_no) + ": malformed " + what);
    }
    return v;
}

}  // namespace

std::string write_cube(const Lut3D& lut, std::string_view title) {
    std::string clean(title);
    std::erase(clean, '"');
    std::erase_if(clean, [](char ch) { return ch == '\n' || ch == '\r'; });

    std::string out;
    out.reserve(lut.size() * 27 + 128);
    out += "TITLE \"" + clean + "\"\n";
    out += "LUT_3D_SIZE " + std::to_string(lut.grid_size()) + "\n";
    out += "DOMAIN_MIN 0 0 0\n";
    out += "DOMAIN_MAX 1 1 1\n";
    char buf[96];
    for (const Rgb& raw : lut.entries()) {
        const Rgb e = clamp01(raw);
        const int n = std::snprintf(buf, sizeof(buf), "%.6f %.6f %.6f\n", e.r, e.g, e.b);
        out.append(buf, static_cast<std::size_t>(n));
    }
    return out;
}

Lut3D read_cube(std::string_view text) {
    int grid = 0;
    std::array<double, 3> dmin{0.0, 0.0, 0.0};
    std::array<double, 3> dmax{1.0, 1.0, 1.0};
    std::vector<Rgb> rows;

    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        const std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto toks = split_ws(line);
        const std::string_view key = toks.front();

        if (std::isalpha(static_cast<unsigned char>(key.front()))) {
            if (key == "TITLE") continue;
            if (key == "LUT_1D_SIZE" || key == "LUT_1D_INPUT_RANGE") throw FormatError("1D LUTs are not supported");
            if (key == "LUT_3D_SIZE") {
                int g = 0;
                if (toks.size() != 2 || std::from_chars(toks[1].data(), toks[1].data() + toks[1].size(), g).ec !=
                                             std::errc() || g < 2 || g > 256) {
                    throw FormatError("line " + std::to_string(line_no) + ": invalid LUT_3D_SIZE");
                }
                grid = g;
            } else if (key == "DOMAIN_MIN") {
                dmin = parse_triple(toks, line_no, "DOMAIN_MIN");
            } else if (key == "DOMAIN_MAX") {
                dmax = parse_triple(toks, line_no, "DOMAIN_MAX");
            }
            // other keywords (LUT_IN_VIDEO_RANGE, ...) carry nothing we use
            continue;
        }

        double v[3];
        if (toks.size() != 3 || !parse_double(toks[0], v[0]) || !parse_double(toks[1], v[1]) ||
            !parse_double(toks[2], v[2])) {
            throw FormatError("line " + std::to_string(line_no) + ": non-numeric data");
        }
        rows.push_back({v[0], v[1], v[2]});
    }

    if (grid == 0) throw FormatError("missing LUT_3D_SIZE");
    const std::size_t expected = static_cast<std::size_t>(grid) * grid * grid;
    if (rows.size() != expected) {
        throw FormatError("wrong line count: expected " + std::to_string(expected) + " data lines, got " +
                          std::to_string(rows.size()));
    }
    for (int ch = 0; ch < 3; ++ch) {
        if (!(dmax[ch] > dmin[ch])) throw FormatError("DOMAIN_MAX must exceed DOMAIN_MIN");
    }
    const bool unit = dmin == std::array<double, 3>{0.0, 0.0, 0.0} && dmax == std::array<double, 3>{1.0, 1.0, 1.0};
    if (!unit) {
        for (Rgb& e : rows) {
            for (int ch = 0; ch < 3; ++ch) e[ch] = (e[ch] - dmin[ch]) / (dmax[ch] - dmin[ch]);
        }
    }
    return Lut3D(grid, std::move(rows));
}

}  // namespace lorlut
