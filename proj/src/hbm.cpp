#include "ctxfuse/hbm.hpp"

#include <cmath>

#include "ctxfuse/mcmc.hpp"

namespace ctxfuse {

Vec normalize_eta(const Vec& eta_raw, int n_objects) {
    if (n_objects < 1) fail(Err::InvalidInput, "need at least one object");
    for (int i = 0; i < eta_raw.size(); ++i) {
        if (!std::isfinite(eta_raw[i])) fail(Err::InvalidInput, "non-finite eta_raw");
    }
    const double mx = eta_raw.maxCoeff();
    Vec e = (eta_raw.array() - mx).exp();
    return e * (static_cast<double>(n_objects) / e.sum());
}

Vec eta_prior_mean(const ContextModel& context) {
    Vec m(context.mu.size());
    for (int i = 0; i < m.size(); ++i) {
        // zero frequencies get a hard floor; they only occur in learned
        // contexts for classes absent from the corpus
        m[i] = std::log(std::max(context.mu[i], 1e-12));
    }
    return m;
}

Vec sample_eta_raw(const ContextModel& context, Rng& rng) {
    const int m = static_cast<int>(context.mu.size());
    Eigen::LLT<Mat> llt(context.sigma);
    if (llt.info() != Eigen::Success)
        fail(Err::NotPositiveDefinite, "context covariance has no Cholesky factor");
    Vec z(m);
    for (int i = 0; i < m; ++i) z[i] = rng.normal();
    return eta_prior_mean(context) + llt.matrixL() * z;
}

Mat ipf_repair(Mat assignments, const Vec& eta, double tol, int max_sweeps) {
    const int m = static_cast<int>(assignments.rows());
    const int n = static_cast<int>(assignments.cols());
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        for (int i = 0; i < m; ++i) {
            const double rs = assignments.row(i).sum();
            assignments.row(i) *= (rs > 0.0) ? eta[i] / rs : 0.0;
        }
        for (int j = 0; j < n; ++j) {
            const double cs = assignments.col(j).sum();
            if (cs > 0.0) assignments.col(j) /= cs;
        }
        double err = 0.0;
        for (int i = 0; i < m; ++i)
            err = std::max(err, std::abs(assignments.row(i).sum() - eta[i]));
        if (err < tol) return assignments;
    }
    fail(Err::InfeasibleEta, "row sums did not converge to eta");
}

Mat sample_assignments(const Vec& eta, int n_objects, Rng& rng) {
    const int m = static_cast<int>(eta.size());
    if (n_objects < 1) fail(Err::InvalidInput, "need at least one object");
    if (eta.minCoeff() < -kLatentTol || std::abs(eta.sum() - n_objects) > kLatentTol)
        fail(Err::InfeasibleEta, "eta is not a valid row-sum target");
    Mat c(m, n_objects);
    for (int j = 0; j < n_objects; ++j) {
        double s = 0.0;
        for (int i = 0; i < m; ++i) {
            c(i, j) = rng.exponential();
            s += c(i, j);
        }
        c.col(j) /= s;
    }
    return ipf_repair(std::move(c), eta);
}

double sensor_log_likelihood(const SensorReading& reading, const Vec& c) {
    const double s2 = reading.uncertainty * reading.uncertainty;
    const double m = static_cast<double>(reading.probs.size());
    return -0.5 * m * std::log(2.0 * M_PI * s2) -
           (reading.probs - c).squaredNorm() / (2.0 * s2);
}

JointDensityTarget::JointDensityTarget(Scene scene, ContextModel context)
    : scene_(std::move(scene)), context_(std::move(context)) {
    validate_scene(scene_);
    if (context_.mu.size() != scene_.n_classes())
        fail(Err::DimensionMismatch, "context and scene class counts differ");

    prior_mean_ = eta_prior_mean(context_);

    Eigen::LLT<Mat> llt(context_.sigma);
    if (llt.info() != Eigen::Success)
        fail(Err::NotPositiveDefinite, "context covariance has no Cholesky factor");
    const Mat l = llt.matrixL();
    double log_det = 0.0;
    for (int i = 0; i < l.rows(); ++i) log_det += 2.0 * std::log(l(i, i));
    sigma_inv_ = llt.solve(Mat::Identity(l.rows(), l.cols()));
    log_norm_prior_ =
        -0.5 * (static_cast<double>(l.rows()) * std::log(2.0 * M_PI) + log_det);

    log_norm_sensor_.reserve(scene_.readings.size());
    for (const auto& r : scene_.readings) {
        log_norm_sensor_.push_back(
            -0.5 * static_cast<double>(scene_.n_classes()) *
            std::log(2.0 * M_PI * r.uncertainty * r.uncertainty));
    }

    anchor_ = 0;
    for (int n = 1; n < scene_.n_objects(); ++n) {
        if (scene_.readings[static_cast<std::size_t>(n)].uncertainty >
            scene_.readings[static_cast<std::size_t>(anchor_)].uncertainty)
            anchor_ = n;
    }
}

double JointDensityTarget::log_prior_eta(const Vec& eta_raw) const {
    const Vec d = eta_raw - prior_mean_;
    return log_norm_prior_ - 0.5 * d.dot(sigma_inv_ * d);
}

double JointDensityTarget::log_likelihood_column(int object, const Vec& c) const {
    const auto& r = scene_.readings[static_cast<std::size_t>(object)];
    const double s2 = r.uncertainty * r.uncertainty;
    return log_norm_sensor_[static_cast<std::size_t>(object)] -
           (r.probs - c).squaredNorm() / (2.0 * s2);
}

double JointDensityTarget::log_joint(const LatentScene& latent) const {
    check_latent(latent, n_objects(), kLatentTol);
    double ll = log_prior_eta(latent.eta_raw);
    for (int n = 0; n < n_objects(); ++n)
        ll += log_likelihood_column(n, latent.assignments.col(n));
    return ll;
}

LatentScene JointDensityTarget::initial_state() const {
    LatentScene s;
    s.eta_raw = prior_mean_;
    s.eta = normalize_eta(s.eta_raw, n_objects());
    // start from the readings, blended toward uniform so no row is empty
    Mat c(n_classes(), n_objects());
    for (int n = 0; n < n_objects(); ++n) {
        c.col(n) = 0.9 * scene_.readings[static_cast<std::size_t>(n)].probs.array() +
                   0.1 / static_cast<double>(n_classes());
    }
    s.assignments = ipf_repair(std::move(c), s.eta);
    return s;
}

PosteriorResult posterior_class_probabilities(const Scene& scene, const ContextModel& context,
                                              const SamplerConfig& config,
                                              std::optional<std::pair<int, int>> track,
                                              Chain* keep_chain) {
    JointDensityTarget target(scene, validate_context(context));

    std::pair<int, int> coord;
    if (track) {
        coord = *track;
    } else {
        int cls = 0;
        context.mu.maxCoeff(&cls);
        coord = {cls, target.anchor()};
    }

    SamplerConfig cfg = config;
    cfg.track = coord;
    Chain local;
    Chain& chain = keep_chain ? *keep_chain : local;
    chain = run_chain(target, cfg);

    PosteriorResult out;
    out.probabilities = chain.posterior_mean_assignments();
    out.diagnostics.acceptance_rate = chain.acceptance_rate();
    out.diagnostics.iterations = cfg.iterations;
    out.diagnostics.tracked = coord;

    // scores reported for the post-burn-in tracked trace; the converged flag
    // asks whether the rule was first satisfied at some point during the run
    const auto& trace = chain.scalar_trace;
    const long burn = std::min<long>(cfg.burn_in, static_cast<long>(trace.size()));
    std::vector<double> tail(trace.begin() + burn, trace.end());
    out.diagnostics.post_burn_samples = static_cast<long>(tail.size());
    if (static_cast<long>(tail.size()) >= kGewekeMinLength)
        out.diagnostics.geweke_scores = geweke_scores(tail);
    out.diagnostics.converged =
        first_convergence(trace, cfg.geweke_threshold).has_value();
    return out;
}

}  // namespace ctxfuse
