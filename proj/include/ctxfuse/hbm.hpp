#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "ctxfuse/rng.hpp"
#include "ctxfuse/scene_model.hpp"

namespace ctxfuse {

struct SamplerConfig;  // mcmc.hpp

// Count-normalized softmax: eta_m = n_objects * exp(eta_raw_m) / sum_k exp(eta_raw_k),
// computed with max subtraction so saturated inputs cannot overflow.
Vec normalize_eta(const Vec& eta_raw, int n_objects);

// Draw eta_raw from the context prior. The prior is a multivariate normal
// with the context's correlation matrix as covariance and the log of the
// class frequencies as mean, so that the implied class distribution
// softmax(mean) reproduces the measured frequencies exactly.
Vec eta_prior_mean(const ContextModel& context);
Vec sample_eta_raw(const ContextModel& context, Rng& rng);

// Assignment matrix draw: Dirichlet(1) columns repaired to the target row
// sums by iterative proportional fitting (alternating row rescaling toward
// eta and column renormalization). Deterministic given the rng state.
Mat sample_assignments(const Vec& eta, int n_objects, Rng& rng);

// Repair helper shared with the prior sampler: rescales the matrix until row
// sums match eta within tol. Throws InfeasibleEta if it cannot.
Mat ipf_repair(Mat assignments, const Vec& eta, double tol = kEqTol, int max_sweeps = 10000);

// Isotropic normal log density of the reading around a candidate class
// distribution: -(M/2) log(2 pi s^2) - |x - c|^2 / (2 s^2).
double sensor_log_likelihood(const SensorReading& reading, const Vec& c);

// The posterior density the sampler targets: sensor likelihood of every
// reading plus the eta_raw prior term. The conditional of the assignment
// matrix given eta is treated as uniform over its feasible set, so it
// contributes no density term.
class JointDensityTarget {
public:
    JointDensityTarget(Scene scene, ContextModel context);

    const Scene& scene() const { return scene_; }
    const ContextModel& context() const { return context_; }
    int n_classes() const { return scene_.n_classes(); }
    int n_objects() const { return scene_.n_objects(); }

    // reading whose uncertainty is largest; absorbs eta moves in the sampler
    int anchor() const { return anchor_; }
    const Vec& prior_mean() const { return prior_mean_; }

    double log_prior_eta(const Vec& eta_raw) const;
    double log_likelihood_column(int object, const Vec& c) const;
    double log_joint(const LatentScene& latent) const;  // validates at kLatentTol

    LatentScene initial_state() const;

private:
    Scene scene_;
    ContextModel context_;
    Vec prior_mean_;
    Mat sigma_inv_;
    double log_norm_prior_ = 0.0;     // mvn normalizing constant
    std::vector<double> log_norm_sensor_;
    int anchor_ = 0;
};

struct PosteriorDiagnostics {
    double acceptance_rate = 0.0;
    std::vector<double> geweke_scores;  // z-scores of the tracked trace
    bool converged = false;
    long iterations = 0;
    long post_burn_samples = 0;
    std::pair<int, int> tracked;        // (class, object)
};

struct PosteriorResult {
    Mat probabilities;  // M x N posterior mean of the assignment matrix
    PosteriorDiagnostics diagnostics;
};

struct Chain;  // mcmc.hpp

// Runs the Metropolis-Hastings sampler on the joint density and returns the
// posterior mean assignment matrix. track picks the (class, object)
// coordinate used for convergence diagnostics; by default the query is the
// most uncertain reading's largest-frequency class. keep_chain, when given,
// receives the full chain record.
PosteriorResult posterior_class_probabilities(
    const Scene& scene, const ContextModel& context, const SamplerConfig& config,
    std::optional<std::pair<int, int>> track = std::nullopt, Chain* keep_chain = nullptr);

}  // namespace ctxfuse
