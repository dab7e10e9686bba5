#include "ctxfuse/mcmc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace ctxfuse {

void SamplerConfig::validate() const {
    if (iterations < 1) fail(Err::InvalidInput, "iterations must be positive");
    if (burn_in < 0 || burn_in >= iterations)
        fail(Err::InvalidInput, "burn_in must lie inside the run");
    if (thin < 1) fail(Err::InvalidInput, "thin must be >= 1");
    if (!(eta_step > 0.0) || !(c_step > 0.0))
        fail(Err::InvalidInput, "proposal steps must be positive");
}

double Chain::acceptance_rate() const {
    if (accepted.empty()) return 0.0;
    double a = 0.0;
    for (auto f : accepted) a += f;
    return a / static_cast<double>(accepted.size());
}

Mat Chain::posterior_mean_assignments() const {
    Mat sum;
    long count = 0;
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (state_iterations[i] < config.burn_in) continue;
        if (count == 0)
            sum = states[i].assignments;
        else
            sum += states[i].assignments;
        ++count;
    }
    if (count == 0) {
        sum = states.back().assignments;
        count = 1;
    }
    return sum / static_cast<double>(count);
}

Chain run_chain(const JointDensityTarget& target, const SamplerConfig& config) {
    config.validate();
    Rng rng(config.seed);
    const int m = target.n_classes();
    const int n = target.n_objects();
    const int anchor = target.anchor();
    const std::pair<int, int> coord = config.track.value_or(std::make_pair(0, anchor));
    if (coord.first < 0 || coord.first >= m || coord.second < 0 || coord.second >= n)
        fail(Err::InvalidInput, "tracked coordinate out of range");

    LatentScene state = target.initial_state();
    double logd = target.log_joint(state);
    const bool pair_moves = (m >= 2 && n >= 2);

    Chain chain;
    chain.config = config;
    chain.accepted.reserve(static_cast<std::size_t>(config.iterations));
    chain.scalar_trace.reserve(static_cast<std::size_t>(config.iterations));
    chain.states.reserve(static_cast<std::size_t>(config.iterations / config.thin + 1));

    Vec prop_raw(m), prop_eta(m), anchor_col(m);

    for (long iter = 0; iter < config.iterations; ++iter) {
        bool acc = false;
        const bool eta_move = (iter % 2 == 0) || !pair_moves;
        if (eta_move) {
            for (int i = 0; i < m; ++i) prop_raw[i] = state.eta_raw[i] + config.eta_step * rng.normal();
            prop_eta = normalize_eta(prop_raw, n);
            // anchor column absorbs the eta change; set exactly from the
            // other columns so row sums cannot drift
            bool ok = true;
            for (int i = 0; i < m; ++i) {
                double others = 0.0;
                for (int j = 0; j < n; ++j)
                    if (j != anchor) others += state.assignments(i, j);
                anchor_col[i] = prop_eta[i] - others;
                if (anchor_col[i] < 0.0 || anchor_col[i] > 1.0) ok = false;
            }
            if (ok) {
                const double delta =
                    target.log_prior_eta(prop_raw) - target.log_prior_eta(state.eta_raw) +
                    target.log_likelihood_column(anchor, anchor_col) -
                    target.log_likelihood_column(anchor, state.assignments.col(anchor));
                if (mh_accept(delta, rng)) {
                    state.eta_raw = prop_raw;
                    state.eta = prop_eta;
                    state.assignments.col(anchor) = anchor_col;
                    logd += delta;
                    acc = true;
                }
            }
        } else {
            int i = rng.uniform_int(m);
            int j = rng.uniform_int(m - 1);
            if (j >= i) ++j;
            int p = rng.uniform_int(n);
            int q = rng.uniform_int(n - 1);
            if (q >= p) ++q;
            const double d = rng.uniform(-config.c_step, config.c_step);
            const double ip = state.assignments(i, p) + d;
            const double jp = state.assignments(j, p) - d;
            const double iq = state.assignments(i, q) - d;
            const double jq = state.assignments(j, q) + d;
            if (ip >= 0.0 && ip <= 1.0 && jp >= 0.0 && jp <= 1.0 && iq >= 0.0 &&
                iq <= 1.0 && jq >= 0.0 && jq <= 1.0) {
                Vec colp = state.assignments.col(p);
                Vec colq = state.assignments.col(q);
                const double before = target.log_likelihood_column(p, colp) +
                                      target.log_likelihood_column(q, colq);
                colp[i] = ip;
                colp[j] = jp;
                colq[i] = iq;
                colq[j] = jq;
                const double after = target.log_likelihood_column(p, colp) +
                                     target.log_likelihood_column(q, colq);
                if (mh_accept(after - before, rng)) {
                    state.assignments.col(p) = colp;
                    state.assignments.col(q) = colq;
                    logd += after - before;
                    acc = true;
                }
            }
        }
        chain.accepted.push_back(acc ? 1 : 0);
        chain.scalar_trace.push_back(state.assignments(coord.first, coord.second));
        if (iter % config.thin == 0) {
            chain.states.push_back(state);
            chain.state_iterations.push_back(iter);
            chain.log_densities.push_back(logd);
        }
    }
    return chain;
}

namespace {

double mean_of(std::span<const double> w) {
    double s = 0.0;
    for (double v : w) s += v;
    return s / static_cast<double>(w.size());
}

// variance of the window mean, estimated from batch means
double var_of_mean(std::span<const double> w, int batches) {
    const int nb = std::min<int>(batches, static_cast<int>(w.size()));
    if (nb < 2) return 0.0;
    const std::size_t bs = w.size() / static_cast<std::size_t>(nb);
    double bm_sum = 0.0, bm_sq = 0.0;
    for (int b = 0; b < nb; ++b) {
        const double bm = mean_of(w.subspan(static_cast<std::size_t>(b) * bs, bs));
        bm_sum += bm;
        bm_sq += bm * bm;
    }
    const double mean = bm_sum / nb;
    const double var = (bm_sq - nb * mean * mean) / (nb - 1);
    return std::max(var, 0.0) / nb;
}

}  // namespace

std::vector<double> geweke_scores(std::span<const double> series, GewekeOptions opts) {
    const long n = static_cast<long>(series.size());
    if (n < kGewekeMinLength) fail(Err::SeriesTooShort, "series shorter than 200 samples");

    const std::size_t first_len =
        std::max<std::size_t>(2, static_cast<std::size_t>(opts.first * n));
    const auto head = series.subspan(0, first_len);
    const std::size_t tail_len = static_cast<std::size_t>(opts.last * n);
    const auto tail = series.subspan(series.size() - tail_len, tail_len);
    const std::size_t seg = tail.size() / static_cast<std::size_t>(opts.segments);
    if (seg < 1) fail(Err::SeriesTooShort, "segments would be empty");

    const double head_mean = mean_of(head);
    const double head_vom = var_of_mean(head, opts.batches);

    std::vector<double> scores;
    scores.reserve(static_cast<std::size_t>(opts.segments));
    for (int k = 0; k < opts.segments; ++k) {
        const auto w = tail.subspan(static_cast<std::size_t>(k) * seg, seg);
        const double diff = head_mean - mean_of(w);
        if (!opts.normalize) {
            scores.push_back(diff);
            continue;
        }
        const double den = head_vom + var_of_mean(w, opts.batches);
        scores.push_back(den > 0.0 ? diff / std::sqrt(den) : 0.0);
    }
    return scores;
}

bool converged(const std::vector<double>& scores, double threshold, int max_exceed,
               int expected_count) {
    if (static_cast<int>(scores.size()) != expected_count)
        fail(Err::WrongCount, "expected " + std::to_string(expected_count) + " scores");
    int exceed = 0;
    for (double s : scores) {
        if (std::abs(s) > threshold) ++exceed;
    }
    return exceed <= max_exceed;
}

std::optional<long> first_convergence(std::span<const double> trace, double threshold,
                                      long check_every) {
    for (long t = check_every; t <= static_cast<long>(trace.size()); t += check_every) {
        if (t < kGewekeMinLength) continue;
        if (converged(geweke_scores(trace.subspan(0, static_cast<std::size_t>(t))), threshold))
            return t;
    }
    return std::nullopt;
}

std::vector<BenchmarkEntry> benchmark(const JointDensityTarget& target,
                                      const std::vector<SamplerConfig>& configs,
                                      long check_every) {
    if (configs.empty()) fail(Err::InvalidInput, "need at least one config");
    std::vector<BenchmarkEntry> out;
    out.reserve(configs.size());
    for (const auto& cfg : configs) {
        BenchmarkEntry e;
        e.config = cfg;
        const auto t0 = std::chrono::steady_clock::now();
        const Chain chain = run_chain(target, cfg);
        const auto t1 = std::chrono::steady_clock::now();
        e.micros_per_iter =
            std::chrono::duration<double, std::micro>(t1 - t0).count() /
            static_cast<double>(cfg.iterations);
        e.acceptance_rate = chain.acceptance_rate();

        const auto& trace = chain.scalar_trace;
        e.converged_at = first_convergence(trace, cfg.geweke_threshold, check_every);
        const long burn = std::min<long>(cfg.burn_in, static_cast<long>(trace.size()));
        e.estimate = mean_of(std::span(trace).subspan(static_cast<std::size_t>(burn)));
        out.push_back(std::move(e));
    }
    return out;
}

void dump_chain_csv(const Chain& chain, std::ostream& os) {
    if (chain.states.empty()) return;
    const int m = static_cast<int>(chain.states.front().assignments.rows());
    const int n = static_cast<int>(chain.states.front().assignments.cols());
    os << "iteration,log_density";
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < m; ++i) os << ",c_" << i << '_' << j;
    for (int i = 0; i < m; ++i) os << ",eta_" << i;
    os << '\n';
    char buf[32];
    const auto emit = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << ',' << buf;
    };
    for (std::size_t s = 0; s < chain.states.size(); ++s) {
        os << chain.state_iterations[s];
        emit(chain.log_densities[s]);
        const auto& st = chain.states[s];
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < m; ++i) emit(st.assignments(i, j));
        for (int i = 0; i < m; ++i) emit(st.eta[i]);
        os << '\n';
    }
}

}  // namespace ctxfuse
