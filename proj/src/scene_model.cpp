#include "ctxfuse/scene_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ctxfuse {

namespace {

std::string lower(const std::string& s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

bool ClassCatalog::name_less(const std::string& a, const std::string& b) {
    const std::string la = lower(a), lb = lower(b);
    if (la != lb) return la < lb;
    return a < b;
}

ClassCatalog::ClassCatalog(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.empty()) fail(Err::InvalidInput, "catalog needs at least one class");
    std::sort(names_.begin(), names_.end(), name_less);
    for (std::size_t i = 1; i < names_.size(); ++i) {
        if (names_[i] == names_[i - 1])
            fail(Err::InvalidInput, "duplicate class name: " + names_[i]);
    }
}

std::optional<int> ClassCatalog::index_of(const std::string& name) const {
    auto it = std::lower_bound(names_.begin(), names_.end(), name, name_less);
    if (it != names_.end() && *it == name) return static_cast<int>(it - names_.begin());
    return std::nullopt;
}

long AnnotatedCorpus::total_instances() const {
    long n = 0;
    for (const auto& img : images) n += static_cast<long>(img.size());
    return n;
}

bool normalize_mu(Vec& mu) {
    for (int i = 0; i < mu.size(); ++i) {
        if (!std::isfinite(mu[i])) fail(Err::InvalidInput, "non-finite frequency");
        if (mu[i] < 0.0) fail(Err::NegativeFrequency, "negative class frequency");
    }
    const double s = mu.sum();
    if (s <= 0.0) fail(Err::UnnormalizedMu, "class frequencies sum to zero");
    if (std::abs(s - 1.0) <= kEqTol) return false;
    mu /= s;
    return true;
}

ContextModel validate_context(ContextModel model) {
    const int m = static_cast<int>(model.mu.size());
    if (m < 1) fail(Err::InvalidInput, "empty context model");
    if (model.sigma.rows() != m || model.sigma.cols() != m)
        fail(Err::DimensionMismatch, "sigma dimension does not match mu");

    for (int i = 0; i < m; ++i) {
        if (model.mu[i] < 0.0) fail(Err::NegativeFrequency, "negative class frequency");
    }
    if (std::abs(model.mu.sum() - 1.0) > kEqTol)
        fail(Err::UnnormalizedMu, "class frequencies must sum to 1");

    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
            if (std::abs(model.sigma(i, j) - model.sigma(j, i)) > kEqTol)
                fail(Err::AsymmetricSigma, "correlation matrix is not symmetric");
        }
        if (std::abs(model.sigma(i, i) - 1.0) > kEqTol)
            fail(Err::BadDiagonal, "correlation matrix diagonal must be 1");
    }

    Eigen::SelfAdjointEigenSolver<Mat> es(model.sigma);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= kEigenFloor)
        fail(Err::NotPositiveDefinite, "correlation matrix is not positive definite");

    return model;
}

void validate_scene(const Scene& scene) {
    const int m = scene.n_classes();
    if (scene.readings.empty()) fail(Err::InvalidInput, "scene needs at least one reading");
    for (const auto& r : scene.readings) {
        if (r.probs.size() != m) fail(Err::DimensionMismatch, "reading dimension mismatch");
        if (!(r.uncertainty > 0.0)) fail(Err::InvalidInput, "uncertainty must be positive");
        double s = 0.0;
        for (int i = 0; i < m; ++i) {
            if (r.probs[i] < -kEqTol || r.probs[i] > 1.0 + kEqTol)
                fail(Err::InvalidInput, "reading probability outside [0,1]");
            s += r.probs[i];
        }
        if (std::abs(s - 1.0) > kEqTol)
            fail(Err::InvalidInput, "reading probabilities must sum to 1");
    }
}

void check_latent(const LatentScene& latent, int n_objects, double tol) {
    const int m = static_cast<int>(latent.eta.size());
    const int n = static_cast<int>(latent.assignments.cols());
    if (latent.eta_raw.size() != m || latent.assignments.rows() != m || n != n_objects)
        fail(Err::InvalidLatent, "latent dimensions inconsistent");
    for (int i = 0; i < m; ++i) {
        if (!std::isfinite(latent.eta_raw[i]) || !std::isfinite(latent.eta[i]))
            fail(Err::InvalidLatent, "non-finite latent state");
    }
    if (std::abs(latent.eta.sum() - n_objects) > tol)
        fail(Err::InvalidLatent, "eta does not sum to the object count");
    for (int j = 0; j < n; ++j) {
        double cs = 0.0;
        for (int i = 0; i < m; ++i) {
            const double v = latent.assignments(i, j);
            if (v < -tol || v > 1.0 + tol)
                fail(Err::InvalidLatent, "assignment entry outside [0,1]");
            cs += v;
        }
        if (std::abs(cs - 1.0) > tol) fail(Err::InvalidLatent, "column does not sum to 1");
    }
    for (int i = 0; i < m; ++i) {
        if (std::abs(latent.assignments.row(i).sum() - latent.eta[i]) > tol)
            fail(Err::InvalidLatent, "row sums do not match eta");
    }
}

ContextFile parse_context_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(Err::ParseError, std::string("context file: ") + e.what());
    }
    try {
        std::vector<std::string> classes = j.at("classes").get<std::vector<std::string>>();
        ClassCatalog catalog(classes);
        if (classes != catalog.names())
            fail(Err::ParseError, "context file classes are not in catalog order");

        ContextModel model;
        model.name = j.at("name").get<std::string>();
        const auto mu = j.at("mu").get<std::vector<double>>();
        const auto sig = j.at("sigma").get<std::vector<std::vector<double>>>();
        const int m = catalog.size();
        if (static_cast<int>(mu.size()) != m || static_cast<int>(sig.size()) != m)
            fail(Err::ParseError, "context file dimensions inconsistent");
        model.mu = Eigen::Map<const Vec>(mu.data(), m);
        model.sigma.resize(m, m);
        for (int i = 0; i < m; ++i) {
            if (static_cast<int>(sig[i].size()) != m)
                fail(Err::ParseError, "context file sigma is not square");
            for (int k = 0; k < m; ++k) model.sigma(i, k) = sig[i][k];
        }
        ContextFile out;
        out.mu_was_rescaled = normalize_mu(model.mu);
        out.model = validate_context(std::move(model));
        out.catalog = std::move(catalog);
        return out;
    } catch (const nlohmann::json::exception& e) {
        fail(Err::ParseError, std::string("context file: ") + e.what());
    }
}

ContextFile load_context_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Err::IoError, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_context_json(ss.str());
}

std::string context_to_json(const ContextModel& model, const ClassCatalog& catalog) {
    nlohmann::json j;
    j["name"] = model.name;
    j["classes"] = catalog.names();
    j["mu"] = std::vector<double>(model.mu.data(), model.mu.data() + model.mu.size());
    std::vector<std::vector<double>> sig;
    for (int i = 0; i < model.sigma.rows(); ++i) {
        sig.emplace_back(model.sigma.row(i).begin(), model.sigma.row(i).end());
    }
    j["sigma"] = sig;
    return j.dump(2);
}

void save_context_file(const ContextModel& model, const ClassCatalog& catalog,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(Err::IoError, "cannot write " + path);
    out << context_to_json(model, catalog) << '\n';
}

}  // namespace ctxfuse
