#pragma once

#include <cstdint>
#include <vector>

#include "ctxfuse/hbm.hpp"
#include "ctxfuse/mcmc.hpp"
#include "ctxfuse/scene_model.hpp"

namespace ctxfuse {

struct HyperpriorOptions {
    double confidence_threshold = 0.05;  // readings with uncertainty <= this inform the weights
    long mc_samples = 50000;
    std::uint64_t seed = 1;
    Vec prior_weights;  // empty: flat prior over contexts
};

// Posterior weight over candidate contexts given the scene's high-confidence
// readings. Each such reading contributes its most probable class; the
// evidence per context is the prior-predictive Monte Carlo estimate of the
// per-reading (geometric-mean) multinomial likelihood of those class
// decisions under the context's frequency prior. Deterministic given the
// seed; output sums to 1.
Vec context_posterior(const Scene& scene, const std::vector<ContextModel>& contexts,
                      const HyperpriorOptions& opts = {});

// Weighted mixture of per-context posterior matrices. Pure; linear in the
// weights.
Mat mix_posteriors(const std::vector<Mat>& posteriors, const Vec& weights);

struct FusionResult {
    Mat probabilities;
    std::vector<PosteriorDiagnostics> per_context;
};

// One sampler run per context (seeds derived from config.seed), mixed with
// the given weights.
FusionResult fuse_with_hyperprior(const Scene& scene,
                                  const std::vector<ContextModel>& contexts,
                                  const Vec& weights, const SamplerConfig& config);

}  // namespace ctxfuse
