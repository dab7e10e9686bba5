#include "ctxfuse/hyperprior.hpp"

#include <cmath>
#include <future>

namespace ctxfuse {

Vec context_posterior(const Scene& scene, const std::vector<ContextModel>& contexts,
                      const HyperpriorOptions& opts) {
    if (contexts.empty()) fail(Err::NoContexts, "no candidate contexts");
    validate_scene(scene);
    const int m = scene.n_classes();
    const int k = static_cast<int>(contexts.size());

    Vec prior = opts.prior_weights;
    if (prior.size() == 0) prior = Vec::Constant(k, 1.0 / k);
    if (prior.size() != k) fail(Err::DimensionMismatch, "prior weight count mismatch");
    if (prior.minCoeff() < 0.0 || prior.sum() <= 0.0)
        fail(Err::InvalidInput, "prior weights must be non-negative and not all zero");

    // class decisions of the high-confidence readings
    Vec counts = Vec::Zero(m);
    for (const auto& r : scene.readings) {
        if (r.uncertainty > opts.confidence_threshold) continue;
        int cls = 0;
        r.probs.maxCoeff(&cls);
        counts[cls] += 1.0;
    }
    const double total = counts.sum();
    if (total <= 0.0) {
        // nothing confidently resolved; the prior is all we have
        return prior / prior.sum();
    }
    const Vec exponent = counts / total;  // per-reading average log likelihood

    const auto estimate_log_evidence = [&](int c) -> double {
        const ContextModel ctx = validate_context(contexts[static_cast<std::size_t>(c)]);
        if (ctx.mu.size() != m) fail(Err::DimensionMismatch, "context dimension mismatch");
        Rng rng(derive_seed(opts.seed, static_cast<std::uint64_t>(c)));
        Eigen::LLT<Mat> llt(ctx.sigma);
        const Mat l = llt.matrixL();
        const Vec mean = eta_prior_mean(ctx);

        // log-sum-exp accumulation of the bounded count likelihood
        double max_ll = -std::numeric_limits<double>::infinity();
        std::vector<double> lls(static_cast<std::size_t>(opts.mc_samples));
        Vec z(m), eta_raw(m);
        for (long s = 0; s < opts.mc_samples; ++s) {
            for (int i = 0; i < m; ++i) z[i] = rng.normal();
            eta_raw = mean + l * z;
            const double mx = eta_raw.maxCoeff();
            double denom = 0.0;
            for (int i = 0; i < m; ++i) denom += std::exp(eta_raw[i] - mx);
            double ll = 0.0;
            for (int i = 0; i < m; ++i) {
                if (exponent[i] > 0.0)
                    ll += exponent[i] * (eta_raw[i] - mx - std::log(denom));
            }
            lls[static_cast<std::size_t>(s)] = ll;
            max_ll = std::max(max_ll, ll);
        }
        if (!std::isfinite(max_ll)) return -std::numeric_limits<double>::infinity();
        double acc = 0.0;
        for (double ll : lls) acc += std::exp(ll - max_ll);
        return max_ll + std::log(acc / static_cast<double>(opts.mc_samples));
    };

    // contexts are independent, estimate them concurrently
    std::vector<std::future<double>> jobs;
    jobs.reserve(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c)
        jobs.push_back(std::async(std::launch::async, estimate_log_evidence, c));
    Vec log_evidence(k);
    for (int c = 0; c < k; ++c) log_evidence[c] = jobs[static_cast<std::size_t>(c)].get();

    Vec log_w(k);
    for (int c = 0; c < k; ++c)
        log_w[c] = (prior[c] > 0.0 ? std::log(prior[c]) : -std::numeric_limits<double>::infinity()) +
                   log_evidence[c];
    const double mx = log_w.maxCoeff();
    if (!std::isfinite(mx)) fail(Err::AllLikelihoodsZero, "every context has zero evidence");
    Vec w = (log_w.array() - mx).exp();
    return w / w.sum();
}

Mat mix_posteriors(const std::vector<Mat>& posteriors, const Vec& weights) {
    if (posteriors.empty()) fail(Err::NoContexts, "no posteriors to mix");
    if (static_cast<int>(posteriors.size()) != weights.size())
        fail(Err::DimensionMismatch, "weight count does not match posterior count");
    if (std::abs(weights.sum() - 1.0) > kLatentTol)
        fail(Err::InvalidInput, "weights must sum to 1");
    Mat out = Mat::Zero(posteriors.front().rows(), posteriors.front().cols());
    for (std::size_t i = 0; i < posteriors.size(); ++i) {
        if (posteriors[i].rows() != out.rows() || posteriors[i].cols() != out.cols())
            fail(Err::DimensionMismatch, "posterior dimensions differ");
        out += weights[static_cast<int>(i)] * posteriors[i];
    }
    return out;
}

FusionResult fuse_with_hyperprior(const Scene& scene,
                                  const std::vector<ContextModel>& contexts,
                                  const Vec& weights, const SamplerConfig& config) {
    if (contexts.empty()) fail(Err::NoContexts, "no contexts to fuse");

    // one chain per context, each with its own derived seed; chains share
    // nothing mutable so they run concurrently
    std::vector<std::future<PosteriorResult>> jobs;
    jobs.reserve(contexts.size());
    for (std::size_t c = 0; c < contexts.size(); ++c) {
        SamplerConfig cfg = config;
        cfg.seed = derive_seed(config.seed, static_cast<std::uint64_t>(c) + 1000);
        jobs.push_back(std::async(std::launch::async, [&scene, &contexts, cfg, c] {
            return posterior_class_probabilities(scene, contexts[c], cfg, cfg.track);
        }));
    }
    std::vector<Mat> posteriors;
    FusionResult result;
    posteriors.reserve(contexts.size());
    for (auto& job : jobs) {
        auto post = job.get();
        posteriors.push_back(std::move(post.probabilities));
        result.per_context.push_back(std::move(post.diagnostics));
    }
    result.probabilities = mix_posteriors(posteriors, weights);
    return result;
}

}  // namespace ctxfuse
