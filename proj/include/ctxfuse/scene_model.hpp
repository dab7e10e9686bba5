#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "ctxfuse/errors.hpp"

namespace ctxfuse {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Validation tolerances shared across the domain types.
inline constexpr double kEqTol = 1e-9;        // equality-style invariants
inline constexpr double kEigenFloor = 1e-12;  // smallest admissible eigenvalue
inline constexpr double kLatentTol = 1e-6;    // latent checks inside the density

// Ordered catalog of class names. Order is lexicographic (case-insensitive,
// ties broken case-sensitively) and fixed at construction; every vector and
// matrix in the library is indexed in this order.
class ClassCatalog {
public:
    ClassCatalog() = default;
    explicit ClassCatalog(std::vector<std::string> names);

    int size() const { return static_cast<int>(names_.size()); }
    const std::string& name(int i) const { return names_[static_cast<std::size_t>(i)]; }
    const std::vector<std::string>& names() const { return names_; }
    std::optional<int> index_of(const std::string& name) const;

    bool operator==(const ClassCatalog& other) const { return names_ == other.names_; }

    // The ordering rule, exposed for reuse (edge orientation, sorting).
    static bool name_less(const std::string& a, const std::string& b);

private:
    std::vector<std::string> names_;
};

// A named context: relative class frequencies and the class correlation
// matrix, both in catalog order.
struct ContextModel {
    std::string name;
    Vec mu;      // non-negative, sums to 1
    Mat sigma;   // symmetric, unit diagonal, positive definite
};

struct SensorReading {
    Vec probs;           // class-probability vector, sums to 1
    double uncertainty;  // reported std dev (probability units), > 0
};

struct Scene {
    ClassCatalog catalog;
    std::vector<SensorReading> readings;

    int n_classes() const { return catalog.size(); }
    int n_objects() const { return static_cast<int>(readings.size()); }
};

// Latent state of the generative model for one scene. eta is always the
// count-normalized softmax of eta_raw; assignments has columns on the
// probability simplex and row sums equal to eta.
struct LatentScene {
    Vec eta_raw;
    Vec eta;
    Mat assignments;  // M x N
};

struct AnnotatedCorpus {
    ClassCatalog catalog;
    std::vector<std::vector<int>> images;  // per image: labeled instances (class ids, duplicates allowed)

    long total_instances() const;
};

// Throws on the first violated invariant; returns the model unchanged
// otherwise. Checks: mu >= 0 and normalized, sigma symmetric with unit
// diagonal, smallest eigenvalue above kEigenFloor.
ContextModel validate_context(ContextModel model);

// mu must sum to 1; ingestion paths rescale instead of failing and report
// back whether they had to. Throws NegativeFrequency / UnnormalizedMu when
// the vector cannot be repaired.
bool normalize_mu(Vec& mu);

void validate_scene(const Scene& scene);

// Throws InvalidLatent when a constraint is broken beyond tol.
void check_latent(const LatentScene& latent, int n_objects, double tol = kEqTol);

// Context-model file I/O. JSON object {"name", "classes", "mu", "sigma"},
// classes stored in catalog order, numbers at full double precision.
struct ContextFile {
    ClassCatalog catalog;
    ContextModel model;
    bool mu_was_rescaled = false;
};

ContextFile load_context_file(const std::string& path);
ContextFile parse_context_json(const std::string& text);
std::string context_to_json(const ContextModel& model, const ClassCatalog& catalog);
void save_context_file(const ContextModel& model, const ClassCatalog& catalog,
                       const std::string& path);

}  // namespace ctxfuse
