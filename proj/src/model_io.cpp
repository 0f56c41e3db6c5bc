#include <cmath>
#include <cstdio>
#include <cstdlib>
#include "json.hpp"
#include <sstream>
#include <string>

#include "lorlut/io.hpp"

namespace lorlut {
namespace {

std::string hex(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

void append_values(std::string& out, std::string_view key, const auto& values) {
    out += key;
    for (double v : values) {
        out += ' ';
        out += hex(v);
    }
    out += '\n';
}

class LineReader {
public:
    explicit LineReader(std::string_view text) : text_(text) {}

    // Next non-empty line split into whitespace tokens; empty at end of input.
    std::vector<std::string> next() {
        while (pos_ < text_.size()) {
            const std::size_t nl = text_.find('\n', pos_);
            const std::string_view line = text_.substr(pos_, nl == std::string_view::npos ? std::string_view::npos : nl - pos_);
            pos_ = nl == std::string_view::npos ? text_.size() : nl + 1;
            ++line_no_;
            std::istringstream in{std::string(line)};
            std::vector<std::string> toks;
            for (std::string t; in >> t;) toks.push_back(std::move(t));
            if (!toks.empty()) return toks;
        }
        return {};
    }

    int line_no() const { return line_no_; }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    int line_no_ = 0;
};

double parse_number(const std::string& tok, int line_no) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size() || !std::isfinite(v)) {
        throw FormatError("model line " + std::to_string(line_no) + ": invalid number '" + tok + "'");
    }
    return v;
}

int parse_count(const std::vector<std::string>& toks, std::string_view key, int line_no) {
    if (toks.size() != 2 || toks[0] != key) {
        throw FormatError("model line " + std::to_string(line_no) + ": expected '" + std::string(key) + " <n>'");
    }
    try {
        std::size_t used = 0;
        const int n = std::stoi(toks[1], &used);
        if (used != toks[1].size() || n < 0) throw std::invalid_argument("negative");
        return n;
    } catch (const std::exception&) {
        throw FormatError("model line " + std::to_string(line_no) + ": invalid " + std::string(key) + " count");
    }
}

std::vector<double> parse_vector(const std::vector<std::string>& toks, std::string_view key, std::size_t n,
                                 int line_no) {
    if (toks.empty() || toks[0] != key) {
        throw FormatError("inconsistent shapes: model line " + std::to_string(line_no) + " should start with '" +
                          std::string(key) + "'");
    }
    if (toks.size() != n + 1) {
        throw FormatError("inconsistent shapes: '" + std::string(key) + "' on model line " + std::to_string(line_no) +
                          " has " + std::to_string(toks.size() - 1) + " values, expected " + std::to_string(n));
    }
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 1; i < toks.size(); ++i) out.push_back(parse_number(toks[i], line_no));
    return out;
}

}  // namespace

std::string write_model(const LorLutModel& m, const FitReport* report) {
    m.validate();
    std::string out;
    out += kModelMagic;
    out += '\n';
    out += "grid " + std::to_string(m.grid_size) + "\n";
    out += "bases " + std::to_string(m.basis_count()) + "\n";
    out += "rank " + std::to_string(m.rank()) + "\n";
    append_values(out, "alphas", m.alphas);
    if (m.bases.empty()) {
        out += "base identity\n";
    } else {
        const Lut3D identity = identity_lut(m.grid_size);
        for (int k = 0; k < m.basis_count(); ++k) {
            const Lut3D& b = m.bases[static_cast<std::size_t>(k)];
            if (b == identity) {
                out += "basis " + std::to_string(k) + " identity\n";
                continue;
            }
            out += "basis " + std::to_string(k) + " dense\n";
            for (const Rgb& e : b.entries()) out += hex(e.r) + ' ' + hex(e.g) + ' ' + hex(e.b) + '\n';
        }
    }
    for (int r = 0; r < m.rank(); ++r) {
        const CpComponent& comp = m.factors[r];
        out += "component " + std::to_string(r) + "\n";
        append_values(out, "u", comp.u);
        append_values(out, "v", comp.v);
        append_values(out, "w", comp.w);
        append_values(out, "c", comp.c);
    }
    if (report != nullptr) {
        char buf[64];
        auto meta = [&](const char* key, double v) {
            std::snprintf(buf, sizeof(buf), "%.6g", v);
            out += std::string("meta ") + key + ' ' + buf + '\n';
        };
        out += "meta steps " + std::to_string(report->steps) + "\n";
        meta("final_loss", report->final_loss);
        meta("psnr", report->psnr);
        if (report->ssim) meta("ssim", *report->ssim);
        meta("mean_delta_e00", report->mean_delta_e);
    }
    out += "end\n";
    return out;
}

ModelFile parse_model(std::string_view text) {
    LineReader in(text);
    auto toks = in.next();
    if (toks.size() != 2 || toks[0] != "lorlut-model") throw FormatError("not a lorlut model file");
    if (toks[1] != "v1") throw FormatError("version mismatch: expected v1, got " + toks[1]);

    ModelFile file;
    LorLutModel& m = file.model;
    m.grid_size = parse_count(in.next(), "grid", in.line_no());
    if (m.grid_size < 2 || m.grid_size > 256) throw FormatError("model grid size out of range");
    const int k_count = parse_count(in.next(), "bases", in.line_no());
    const int rank = parse_count(in.next(), "rank", in.line_no());
    const auto g = static_cast<std::size_t>(m.grid_size);

    m.alphas = parse_vector(in.next(), "alphas", static_cast<std::size_t>(k_count), in.line_no());

    if (k_count == 0) {
        toks = in.next();
        if (toks != std::vector<std::string>{"base", "identity"}) {
            throw FormatError("inconsistent shapes: K = 0 model must declare 'base identity'");
        }
    }
    for (int k = 0; k < k_count; ++k) {
        toks = in.next();
        if (toks.size() != 3 || toks[0] != "basis" || toks[1] != std::to_string(k)) {
            throw FormatError("inconsistent shapes: expected basis " + std::to_string(k) + " on model line " +
                              std::to_string(in.line_no()));
        }
        if (toks[2] == "identity") {
            m.bases.push_back(identity_lut(m.grid_size));
        } else if (toks[2] == "dense") {
            std::vector<Rgb> entries;
            entries.reserve(g * g * g);
            for (std::size_t e = 0; e < g * g * g; ++e) {
                const auto row = in.next();
                if (row.size() != 3) {
                    throw FormatError("inconsistent shapes: basis " + std::to_string(k) + " entry on model line " +
                                      std::to_string(in.line_no()) + " is not an RGB triple");
                }
                entries.push_back({parse_number(row[0], in.line_no()), parse_number(row[1], in.line_no()),
                                   parse_number(row[2], in.line_no())});
            }
            m.bases.emplace_back(m.grid_size, std::move(entries));
        } else {
            throw FormatError("model line " + std::to_string(in.line_no()) + ": unknown basis kind '" + toks[2] + "'");
        }
    }

    std::vector<CpComponent> comps;
    toks = in.next();
    while (!toks.empty() && toks[0] == "component") {
        if (toks.size() != 2 || toks[1] != std::to_string(comps.size())) {
            throw FormatError("inconsistent shapes: component index out of sequence on model line " +
                              std::to_string(in.line_no()));
        }
        CpComponent comp;
        comp.u = parse_vector(in.next(), "u", g, in.line_no());
        comp.v = parse_vector(in.next(), "v", g, in.line_no());
        comp.w = parse_vector(in.next(), "w", g, in.line_no());
        const auto c = parse_vector(in.next(), "c", 3, in.line_no());
        std::copy(c.begin(), c.end(), comp.c.begin());
        comps.push_back(std::move(comp));
        toks = in.next();
    }
    if (static_cast<int>(comps.size()) != rank) {
        throw FormatError("inconsistent shapes: rank " + std::to_string(rank) + " declared but " +
                          std::to_string(comps.size()) + " components present");
    }
    m.factors = CpFactors(m.grid_size, std::move(comps));

    while (!toks.empty() && toks[0] == "meta") {
        if (toks.size() < 3) throw FormatError("model line " + std::to_string(in.line_no()) + ": malformed meta");
        std::string value = toks[2];
        for (std::size_t i = 3; i < toks.size(); ++i) value += ' ' + toks[i];
        file.meta[toks[1]] = value;
        toks = in.next();
    }
    if (toks != std::vector<std::string>{"end"}) {
        throw FormatError("model line " + std::to_string(in.line_no()) + ": expected 'end'");
    }
    m.validate();
    return file;
}

LorLutModel read_model(std::string_view text) { return parse_model(text).model; }

std::string report_to_json(const FitReport& report) {
    using nlohmann::json;
    auto number = [](double v) -> json {
        if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
        return v;
    };
    json trace = json::array();
    for (const TraceEntry& t : report.trace) {
        trace.push_back({{"step", t.step},
                         {"total", t.loss.total},
                         {"l1", t.loss.l1},
                         {"delta_e00", t.loss.delta_e},
                         {"tv", t.loss.tv},
                         {"l2", t.loss.l2},
                         {"best_total", t.best_total}});
    }
    json doc = {{"steps", report.steps},
                {"final_loss", report.final_loss},
                {"psnr", number(report.psnr)},
                {"ssim", report.ssim ? json(*report.ssim) : json(nullptr)},
                {"mean_delta_e00", report.mean_delta_e},
                {"seconds", report.seconds},
                {"trace", trace}};
    return doc.dump(2) + "\n";
}

}  // namespace lorlut
