#include "lorlut/service.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <map>
#include <mutex>
#include <random>
#include <shared_mutex>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "lorlut/io.hpp"
#include "lorlut/optim.hpp"
#include "lorlut/version.hpp"

namespace lorlut {
namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr double kScaleLimit = 4.0;

// Failure carrying the HTTP status it should map to.
struct HttpError : Error {
    int status;
    HttpError(int s, const std::string& what) : Error(what), status(s) {}
};

struct Session {
    std::string id;
    ImageBuffer source;

    mutable std::mutex mu;
    LorLutModel model;
    ComponentScales scales;
    std::uint64_t revision = 0;
    Clock::time_point last_access;
    std::uint64_t preview_revision = ~0ULL;
    std::string preview_png;
    std::atomic<bool> fitting{false};
};

struct Snapshot {
    LorLutModel model;
    ComponentScales scales;
};

json number_or_string(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

std::span<const std::uint8_t> as_bytes(const std::string& s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

ImageBuffer decode_image(const std::string& bytes, const char* what) {
    if (bytes.empty()) throw HttpError(400, std::string(what) + " payload is empty");
    try {
        return read_image(as_bytes(bytes));
    } catch (const Error& e) {
        throw HttpError(400, std::string(what) + " could not be decoded: " + e.what());
    }
}

int parse_int(const std::string& text, const char* what) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw HttpError(422, std::string(what) + " must be an integer");
    }
    return v;
}

}  // namespace

struct Service::Impl {
    ServiceConfig cfg;
    httplib::Server http;
    int port = -1;

    mutable std::shared_mutex registry_mu;
    std::map<std::string, std::shared_ptr<Session>, std::less<>> sessions;
    std::mt19937_64 id_rng{std::random_device{}()};

    explicit Impl(ServiceConfig c) : cfg(std::move(c)) {
        if (cfg.max_sessions < 1) throw RangeError("service: max_sessions must be >= 1");
        if (cfg.max_fit_steps < 1) throw RangeError("service: max_fit_steps must be >= 1");
        if (cfg.default_model) cfg.default_model->validate();
        routes();
    }

    LorLutModel default_model() const { return cfg.default_model ? *cfg.default_model : identity_model(33); }

    // Expects the registry lock held exclusively.
    void evict_expired(Clock::time_point now) {
        std::erase_if(sessions, [&](const auto& kv) {
            const Session& s = *kv.second;
            if (s.fitting) return false;
            std::lock_guard lock(s.mu);
            return now - s.last_access > cfg.ttl;
        });
    }

    std::shared_ptr<Session> find(const httplib::Request& req) {
        const std::string& id = req.path_params.at("id");
        std::shared_ptr<Session> s;
        {
            std::shared_lock lock(registry_mu);
            auto it = sessions.find(id);
            if (it != sessions.end()) s = it->second;
        }
        if (!s) throw HttpError(404, "unknown session '" + id + "'");
        const auto now = Clock::now();
        bool expired = false;
        {
            std::lock_guard lock(s->mu);
            expired = now - s->last_access > cfg.ttl && !s->fitting;
            if (!expired) s->last_access = now;
        }
        if (expired) {
            std::unique_lock reg(registry_mu);
            sessions.erase(id);
            throw HttpError(404, "session '" + id + "' expired");
        }
        return s;
    }

    static Snapshot snapshot(const Session& s) {
        std::lock_guard lock(s.mu);
        return {s.model, s.scales};
    }

    std::string new_id() {
        char buf[33];
        std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(id_rng()),
                      static_cast<unsigned long long>(id_rng()));
        return buf;
    }

    static json session_info(const Session& s) {
        return {{"id", s.id},
                {"G", s.model.grid_size},
                {"K", s.model.basis_count()},
                {"R", s.model.rank()},
                {"width", s.source.width()},
                {"height", s.source.height()}};
    }

    void create_session(const httplib::Request& req, httplib::Response& res) {
        std::string image_bytes;
        std::optional<LorLutModel> model;
        if (req.is_multipart_form_data()) {
            if (!req.has_file("image")) throw HttpError(400, "multipart upload needs an 'image' part");
            image_bytes = req.get_file_value("image").content;
            if (req.has_file("model")) {
                try {
                    model = read_model(req.get_file_value("model").content);
                } catch (const Error& e) {
                    throw HttpError(400, std::string("model could not be decoded: ") + e.what());
                }
            }
        } else {
            image_bytes = req.body;
        }

        auto s = std::make_shared<Session>();
        s->source = decode_image(image_bytes, "image");
        s->model = model ? std::move(*model) : default_model();
        s->scales = ComponentScales::ones(s->model.rank());
        s->last_access = Clock::now();

        std::unique_lock lock(registry_mu);
        evict_expired(s->last_access);
        if (static_cast<int>(sessions.size()) >= cfg.max_sessions) {
            throw HttpError(429, "session limit of " + std::to_string(cfg.max_sessions) + " reached");
        }
        do {
            s->id = new_id();
        } while (sessions.contains(s->id));
        sessions.emplace(s->id, s);
        send_json(res, session_info(*s), 201);
    }

    static ComponentScales parse_scales(const std::string& body, int rank) {
        json doc;
        try {
            doc = json::parse(body);
        } catch (const json::exception&) {
            throw HttpError(400, "scales body is not valid JSON");
        }
        if (doc.is_object() && doc.contains("scales")) doc = doc["scales"];
        if (!doc.is_array()) throw HttpError(422, "scales must be a JSON array");
        if (static_cast<int>(doc.size()) != rank) {
            throw HttpError(422, "expected " + std::to_string(rank) + " scales, got " + std::to_string(doc.size()));
        }
        ComponentScales out;
        for (const json& v : doc) {
            if (!v.is_number()) throw HttpError(422, "scales must be numbers");
            const double x = v.get<double>();
            if (!std::isfinite(x) || x < -kScaleLimit || x > kScaleLimit) {
                throw HttpError(422, "scale out of range [-4, 4]");
            }
            out.values.push_back(x);
        }
        return out;
    }

    void put_scales(const httplib::Request& req, httplib::Response& res) {
        auto s = find(req);
        std::lock_guard lock(s->mu);
        s->scales = parse_scales(req.body, s->model.rank());
        ++s->revision;
        send_json(res, {{"scales", s->scales.values}});
    }

    void preview(const httplib::Request& req, httplib::Response& res) {
        auto s = find(req);
        std::unique_lock lock(s->mu);
        if (s->preview_revision != s->revision) {
            const Lut3D lut = compose_lut(s->model, s->scales);
            const auto png = write_image(apply_to_image(lut, s->source, InterpKind::trilinear, true), ImageFormat::png);
            s->preview_png.assign(png.begin(), png.end());
            s->preview_revision = s->revision;
        }
        res.set_content(s->preview_png, "image/png");
    }

    void factors(const httplib::Request& req, httplib::Response& res) {
        auto s = find(req);
        const Snapshot snap = snapshot(*s);
        json comps = json::array();
        for (int r = 0; r < snap.model.rank(); ++r) {
            const ComponentCurves cc = component_curves(snap.model.factors, r);
            comps.push_back({{"index", r},
                             {"u", cc.u},
                             {"v", cc.v},
                             {"w", cc.w},
                             {"c", cc.c},
                             {"magnitude", cc.magnitude},
                             {"scale", snap.scales.values[static_cast<std::size_t>(r)]}});
        }
        send_json(res, {{"G", snap.model.grid_size},
                        {"K", snap.model.basis_count()},
                        {"R", snap.model.rank()},
                        {"alphas", snap.model.alphas},
                        {"components", comps}});
    }

    void slice(const httplib::Request& req, httplib::Response& res) {
        auto s = find(req);
        const std::string axis = req.get_param_value("axis");
        if (axis != "r" && axis != "g" && axis != "b") throw HttpError(422, "axis must be r, g or b");
        if (!req.has_param("index")) throw HttpError(422, "missing index");
        const int index = parse_int(req.get_param_value("index"), "index");
        const Snapshot snap = snapshot(*s);
        const int g = snap.model.grid_size;
        if (index < 0 || index >= g) throw HttpError(422, "index must lie in [0, " + std::to_string(g) + ")");

        const Lut3D lut = compose_lut(snap.model, snap.scales);
        // entries[a][b] runs over the two free axes in r, g, b order
        json rows = json::array();
        for (int a = 0; a < g; ++a) {
            json row = json::array();
            for (int b = 0; b < g; ++b) {
                const Rgb e = axis == "r"   ? lut.at(index, a, b)
                              : axis == "g" ? lut.at(a, index, b)
                                            : lut.at(a, b, index);
                const Rgb c = clamp01(e);
                row.push_back({c.r, c.g, c.b});
            }
            rows.push_back(std::move(row));
        }
        send_json(res, {{"axis", axis}, {"index", index}, {"G", g}, {"entries", std::move(rows)}});
    }

    FitConfig fit_config(const json& doc, const Snapshot& snap) const {
        FitConfig cfg;
        cfg.grid_size = snap.model.grid_size;
        cfg.rank = snap.model.rank() > 0 ? snap.model.rank() : 8;
        cfg.basis_count = 0;
        cfg.steps = std::min(cfg.steps, this->cfg.max_fit_steps);
        try {
            if (!doc.is_object()) throw HttpError(422, "fit config must be a JSON object");
            cfg.steps = std::min(doc.value("steps", cfg.steps), this->cfg.max_fit_steps);
            cfg.rank = doc.value("rank", cfg.rank);
            cfg.basis_count = doc.value("bases", cfg.basis_count);
            cfg.grid_size = doc.value("grid", cfg.grid_size);
            cfg.seed = doc.value("seed", cfg.seed);
            cfg.base_lr = doc.value("lr", cfg.base_lr);
            cfg.weights.reconstruction = doc.value("lambda_l1", cfg.weights.reconstruction);
            cfg.weights.delta_e = doc.value("lambda_delta_e", cfg.weights.delta_e);
            cfg.weights.smoothness = doc.value("lambda_tv", cfg.weights.smoothness);
            cfg.weights.residual = doc.value("lambda_l2", cfg.weights.residual);
            cfg.validate();
        } catch (const json::exception& e) {
            throw HttpError(422, std::string("invalid fit config: ") + e.what());
        } catch (const RangeError& e) {
            throw HttpError(422, std::string("invalid fit config: ") + e.what());
        }
        if (cfg.grid_size > 65) throw HttpError(422, "invalid fit config: grid must be <= 65");
        return cfg;
    }

    void fit(const httplib::Request& req, httplib::Response& res) {
        auto s = find(req);
        std::string target_bytes;
        json doc = json::object();
        if (req.is_multipart_form_data()) {
            if (!req.has_file("target")) throw HttpError(400, "multipart fit needs a 'target' part");
            target_bytes = req.get_file_value("target").content;
            if (req.has_file("config")) {
                try {
                    doc = json::parse(req.get_file_value("config").content);
                } catch (const json::exception&) {
                    throw HttpError(400, "fit config is not valid JSON");
                }
            }
        } else {
            target_bytes = req.body;
            for (const auto& [key, value] : req.params) {
                json parsed;
                try {
                    parsed = json::parse(value);
                } catch (const json::exception&) {
                    throw HttpError(422, "query parameter '" + key + "' is not a number");
                }
                doc[key] = parsed;
            }
        }
        const ImageBuffer target = decode_image(target_bytes, "target");
        if (!target.same_shape(s->source)) {
            throw HttpError(422, "dimension mismatch: target is " + std::to_string(target.width()) + "x" +
                                     std::to_string(target.height()) + ", source is " +
                                     std::to_string(s->source.width()) + "x" + std::to_string(s->source.height()));
        }
        const FitConfig cfg = fit_config(doc, snapshot(*s));

        bool expected = false;
        if (!s->fitting.compare_exchange_strong(expected, true)) {
            throw HttpError(409, "a fit is already running for this session");
        }
        FitResult result;
        try {
            result = fit_image_pair(s->source, target, cfg);
        } catch (...) {
            s->fitting = false;
            throw;
        }
        json report;
        {
            std::lock_guard lock(s->mu);
            s->model = std::move(result.model);
            s->scales = ComponentScales::ones(s->model.rank());
            ++s->revision;
            s->last_access = Clock::now();
            report = {{"steps", result.report.steps},
                      {"final_loss", result.report.final_loss},
                      {"psnr", number_or_string(result.report.psnr)},
                      {"ssim", result.report.ssim ? json(*result.report.ssim) : json(nullptr)},
                      {"mean_delta_e00", result.report.mean_delta_e},
                      {"seconds", result.report.seconds},
                      {"G", s->model.grid_size},
                      {"K", s->model.basis_count()},
                      {"R", s->model.rank()}};
        }
        s->fitting = false;
        send_json(res, report);
    }

    void export_cube(const httplib::Request& req, httplib::Response& res) {
        auto s = find(req);
        const Snapshot snap = snapshot(*s);
        res.set_header("Content-Disposition", "attachment; filename=\"lorlut.cube\"");
        res.set_content(write_cube(compose_lut(snap.model, snap.scales)), "text/plain");
    }

    using Handler = void (Impl::*)(const httplib::Request&, httplib::Response&);

    httplib::Server::Handler wrap(Handler h) {
        return [this, h](const httplib::Request& req, httplib::Response& res) {
            try {
                (this->*h)(req, res);
            } catch (const HttpError& e) {
                send_json(res, {{"error", e.what()}}, e.status);
            } catch (const DimensionError& e) {
                send_json(res, {{"error", e.what()}}, 422);
            } catch (const NumericError& e) {
                send_json(res, {{"error", e.what()}}, 422);
            } catch (const std::exception& e) {
                send_json(res, {{"error", e.what()}}, 500);
            }
        };
    }

    void routes() {
        http.set_payload_max_length(cfg.payload_limit);
        // no SO_REUSEPORT: binding a port that is already served must fail
        http.set_socket_options([](socket_t sock) {
            int yes = 1;
            setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
        });
        http.set_default_headers({{"Access-Control-Allow-Origin", cfg.cors_origin},
                                  {"Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS"},
                                  {"Access-Control-Allow-Headers", "Content-Type"}});
        http.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
        http.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
            send_json(res, {{"status", "ok"}, {"version", std::string(kVersion)}});
        });
        http.Post("/v1/sessions", wrap(&Impl::create_session));
        http.Put("/v1/sessions/:id/scales", wrap(&Impl::put_scales));
        http.Get("/v1/sessions/:id/preview", wrap(&Impl::preview));
        http.Get("/v1/sessions/:id/factors", wrap(&Impl::factors));
        http.Get("/v1/sessions/:id/lut/slice", wrap(&Impl::slice));
        http.Post("/v1/sessions/:id/fit", wrap(&Impl::fit));
        http.Get("/v1/sessions/:id/export.cube", wrap(&Impl::export_cube));
        http.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (res.body.empty()) send_json(res, {{"error", httplib::status_message(res.status)}}, res.status);
        });
    }
};

Service::Service(ServiceConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}

Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
    if (port == 0) {
        impl_->port = impl_->http.bind_to_any_port(host);
    } else {
        impl_->port = impl_->http.bind_to_port(host, port) ? port : -1;
    }
    return impl_->port;
}

bool Service::run() { return impl_->http.listen_after_bind(); }

void Service::stop() {
    if (impl_) impl_->http.stop();
}

bool Service::running() const { return impl_->http.is_running(); }

std::size_t Service::session_count() const {
    std::shared_lock lock(impl_->registry_mu);
    return impl_->sessions.size();
}

bool Service::fit_running(std::string_view id) const {
    std::shared_lock lock(impl_->registry_mu);
    auto it = impl_->sessions.find(id);
    return it != impl_->sessions.end() && it->second->fitting;
}

}  // namespace lorlut
