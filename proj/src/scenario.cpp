#include "ctxfuse/scenario.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ctxfuse/context_learning.hpp"

namespace ctxfuse {

namespace fs = std::filesystem;

ClassCatalog toy_catalog() { return ClassCatalog({"ACME", "GLOBEX", "TRIOZAP"}); }

std::vector<std::string> toy_context_names() {
    return {"iowa", "ohio", "utah", "utah-identity", "none"};
}

ContextModel toy_context(const std::string& name) {
    ContextModel ctx;
    ctx.name = name;
    ctx.mu.resize(3);
    ctx.sigma = Mat::Identity(3, 3);
    if (name == "iowa") {
        ctx.mu << 0.45, 0.45, 0.10;
        ctx.sigma << 1.0, 0.0, -0.9,
                     0.0, 1.0, 0.3,
                    -0.9, 0.3, 1.0;
    } else if (name == "utah") {
        ctx.mu << 0.10, 0.40, 0.50;
        ctx.sigma << 1.0, 0.0, -0.9,
                     0.0, 1.0, 0.3,
                    -0.9, 0.3, 1.0;
    } else if (name == "ohio") {
        // TRIOZAP moves with ACME and against GLOBEX
        ctx.mu << 0.10, 0.50, 0.40;
        ctx.sigma << 1.0, -0.65, 0.9,
                    -0.65, 1.0, -0.9,
                     0.9, -0.9, 1.0;
    } else if (name == "utah-identity") {
        ctx.mu << 0.10, 0.40, 0.50;
    } else if (name == "none") {
        ctx.mu << 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0;
    } else {
        fail(Err::InvalidInput, "unknown toy context: " + name);
    }
    return validate_context(std::move(ctx));
}

namespace {

SensorReading resolved_reading(int cls) {
    SensorReading r;
    r.probs = Vec::Constant(3, 0.005);
    r.probs[cls] = 0.99;
    r.uncertainty = 0.01;
    return r;
}

SensorReading blurry_reading() {
    SensorReading r;
    r.probs = Vec::Constant(3, 1.0 / 3.0);
    r.uncertainty = 0.30;
    return r;
}

}  // namespace

Scene toy_scene() {
    Scene s;
    s.catalog = toy_catalog();
    s.readings = {resolved_reading(0), blurry_reading()};
    return s;
}

Scene toy_hyperprior_scene() {
    Scene s;
    s.catalog = toy_catalog();
    for (int i = 0; i < 3; ++i) s.readings.push_back(resolved_reading(0));
    for (int i = 0; i < 3; ++i) s.readings.push_back(resolved_reading(1));
    s.readings.push_back(blurry_reading());
    return s;
}

int toy_query_class() { return 2; }

int toy_query_object(const Scene& scene) {
    int best = 0;
    for (int n = 1; n < scene.n_objects(); ++n) {
        if (scene.readings[static_cast<std::size_t>(n)].uncertainty >
            scene.readings[static_cast<std::size_t>(best)].uncertainty)
            best = n;
    }
    return best;
}

std::string resolve_data_path(const std::string& path) {
    if (fs::exists(path) || fs::path(path).is_absolute()) return path;
    if (const char* base = std::getenv("CONTEXT_FUSE_DATA_DIR")) {
        const fs::path candidate = fs::path(base) / path;
        if (fs::exists(candidate)) return candidate.string();
    }
    return path;
}

namespace {

SamplerConfig parse_sampler(const nlohmann::json& j, SamplerConfig cfg) {
    cfg.iterations = j.value("iterations", cfg.iterations);
    cfg.burn_in = j.value("burn_in", cfg.burn_in);
    cfg.thin = j.value("thin", cfg.thin);
    cfg.eta_step = j.value("eta_step", cfg.eta_step);
    cfg.c_step = j.value("c_step", cfg.c_step);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.geweke_threshold = j.value("geweke_threshold", cfg.geweke_threshold);
    cfg.validate();
    return cfg;
}

}  // namespace

Scenario parse_scenario_json(const std::string& text, const std::string& base_dir) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(Err::ParseError, std::string("scenario: ") + e.what());
    }
    try {
        Scenario sc;
        sc.scene.catalog = ClassCatalog(j.at("classes").get<std::vector<std::string>>());
        const int m = sc.scene.catalog.size();

        for (const auto& c : j.at("contexts")) {
            if (c.is_string() || c.contains("path")) {
                const std::string rel = c.is_string() ? c.get<std::string>()
                                                      : c.at("path").get<std::string>();
                fs::path p = rel;
                if (!base_dir.empty() && p.is_relative() && !fs::exists(p))
                    p = fs::path(base_dir) / p;
                auto file = load_context_file(resolve_data_path(p.string()));
                if (!(file.catalog == sc.scene.catalog))
                    fail(Err::ParseError, "context file classes do not match the scenario");
                sc.contexts.push_back(std::move(file.model));
            } else if (c.contains("corpus")) {
                fs::path p = c.at("corpus").get<std::string>();
                if (!base_dir.empty() && p.is_relative() && !fs::exists(p))
                    p = fs::path(base_dir) / p;
                auto corpus = load_native_corpus(resolve_data_path(p.string()));
                if (!(corpus.catalog == sc.scene.catalog))
                    fail(Err::ParseError, "corpus classes do not match the scenario");
                sc.contexts.push_back(
                    estimate_context(corpus, c.value("name", p.filename().string())));
            } else {
                ContextModel model;
                model.name = c.at("name").get<std::string>();
                const auto mu = c.at("mu").get<std::vector<double>>();
                const auto sig = c.at("sigma").get<std::vector<std::vector<double>>>();
                if (static_cast<int>(mu.size()) != m || static_cast<int>(sig.size()) != m)
                    fail(Err::ParseError, "context dimensions do not match the class list");
                model.mu = Eigen::Map<const Vec>(mu.data(), m);
                model.sigma.resize(m, m);
                for (int a = 0; a < m; ++a) {
                    if (static_cast<int>(sig[a].size()) != m)
                        fail(Err::ParseError, "context sigma is not square");
                    for (int b = 0; b < m; ++b) model.sigma(a, b) = sig[a][b];
                }
                normalize_mu(model.mu);
                sc.contexts.push_back(validate_context(std::move(model)));
            }
        }
        if (sc.contexts.empty()) fail(Err::ParseError, "scenario has no contexts");

        for (const auto& r : j.at("scene")) {
            SensorReading reading;
            const auto probs = r.at("probs").get<std::vector<double>>();
            if (static_cast<int>(probs.size()) != m)
                fail(Err::ParseError, "reading dimension does not match the class list");
            reading.probs = Eigen::Map<const Vec>(probs.data(), m);
            reading.uncertainty = r.at("uncertainty").get<double>();
            sc.scene.readings.push_back(std::move(reading));
        }
        validate_scene(sc.scene);

        const auto& q = j.at("query");
        if (q.is_array())
            fail(Err::ParseError, "scenario must contain exactly one query object");
        sc.query_object = q.at("object").get<int>();
        const std::string qc = q.at("class").get<std::string>();
        const auto qi = sc.scene.catalog.index_of(qc);
        if (!qi) fail(Err::ParseError, "query class not in catalog: " + qc);
        sc.query_class = *qi;
        if (sc.query_object < 0 || sc.query_object >= sc.scene.n_objects())
            fail(Err::ParseError, "query object index out of range");

        if (j.contains("sampler")) sc.sampler = parse_sampler(j.at("sampler"), sc.sampler);
        sc.sampler.track = std::make_pair(sc.query_class, sc.query_object);

        if (j.contains("hyperprior")) {
            const auto& h = j.at("hyperprior");
            sc.hyperprior = h.value("enabled", true);
            sc.hyper.mc_samples = h.value("mc_samples", sc.hyper.mc_samples);
            sc.hyper.confidence_threshold =
                h.value("confidence_threshold", sc.hyper.confidence_threshold);
            if (h.contains("prior_weights")) {
                const auto w = h.at("prior_weights").get<std::vector<double>>();
                if (w.size() != sc.contexts.size())
                    fail(Err::ParseError, "prior weight count does not match contexts");
                sc.hyper.prior_weights = Eigen::Map<const Vec>(
                    w.data(), static_cast<Eigen::Index>(w.size()));
            }
            sc.hyper.seed = sc.sampler.seed;
        }
        return sc;
    } catch (const nlohmann::json::exception& e) {
        fail(Err::ParseError, std::string("scenario: ") + e.what());
    }
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Err::IoError, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario_json(ss.str(), fs::path(path).parent_path().string());
}

}  // namespace ctxfuse
