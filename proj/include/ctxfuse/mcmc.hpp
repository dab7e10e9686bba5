#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ctxfuse/hbm.hpp"
#include "ctxfuse/rng.hpp"
#include "ctxfuse/scene_model.hpp"

namespace ctxfuse {

inline constexpr long kGewekeMinLength = 200;

struct SamplerConfig {
    long iterations = 100000;
    long burn_in = 20000;
    long thin = 10;
    double eta_step = 0.1;   // random-walk std for eta_raw
    double c_step = 0.05;    // assignment transfer scale
    std::uint64_t seed = 1;

    // diagnostics
    std::optional<std::pair<int, int>> track;  // (class, object) coordinate
    double geweke_threshold = 1.96;            // z-score band for the converged flag

    void validate() const;
};

struct Chain {
    std::vector<LatentScene> states;   // every thin-th state, from iteration 0
    std::vector<long> state_iterations;
    std::vector<double> log_densities;  // per stored state
    std::vector<std::uint8_t> accepted; // per proposal
    std::vector<double> scalar_trace;   // tracked coordinate, every iteration
    SamplerConfig config;

    double acceptance_rate() const;
    // mean assignment matrix over stored states past burn-in
    Mat posterior_mean_assignments() const;
};

// Metropolis-Hastings over (eta_raw, assignments) with two alternating moves:
//  (a) Gaussian random walk on eta_raw; the designated anchor column (the
//      scene's most uncertain reading) absorbs the resulting eta change so
//      every other column and the chart's reference measure stay fixed,
//      which keeps the move exactly reversible;
//  (b) a pairwise transfer inside the assignment matrix: two rows and two
//      columns, mass delta moved around the 2x2 cycle, preserving all row
//      and column sums exactly.
// Deterministic given config.seed.
Chain run_chain(const JointDensityTarget& target, const SamplerConfig& config);

// --- generic driver ---------------------------------------------------------
// The same accept/reject core, usable with any small target (calibration
// tests run it against known densities). Target needs:
//   State initial() const
//   double log_density(const State&) const
//   std::optional<State> propose(const State&, long iter, Rng&) const
//   double scalar(const State&) const
template <class Target>
struct GenericChain {
    std::vector<double> trace;
    std::vector<std::uint8_t> accepted;
    typename Target::State last;
    double acceptance_rate() const {
        if (accepted.empty()) return 0.0;
        double a = 0.0;
        for (auto f : accepted) a += f;
        return a / static_cast<double>(accepted.size());
    }
};

inline bool mh_accept(double log_ratio, Rng& rng) {
    if (log_ratio >= 0.0) return true;
    return std::log(std::max(rng.uniform(), 1e-300)) < log_ratio;
}

template <class Target>
GenericChain<Target> run_generic(const Target& target, long iterations, std::uint64_t seed) {
    Rng rng(seed);
    auto state = target.initial();
    double logd = target.log_density(state);
    GenericChain<Target> out;
    out.trace.reserve(static_cast<std::size_t>(iterations));
    out.accepted.reserve(static_cast<std::size_t>(iterations));
    for (long i = 0; i < iterations; ++i) {
        bool acc = false;
        if (auto prop = target.propose(state, i, rng)) {
            const double logp = target.log_density(*prop);
            if (std::isfinite(logp) && mh_accept(logp - logd, rng)) {
                state = std::move(*prop);
                logd = logp;
                acc = true;
            }
        }
        out.accepted.push_back(acc ? 1 : 0);
        out.trace.push_back(target.scalar(state));
    }
    out.last = state;
    return out;
}

// --- convergence diagnostics -------------------------------------------------
struct GewekeOptions {
    double first = 0.1;   // fraction used for the reference window
    double last = 0.5;    // fraction split into segments
    int segments = 20;
    int batches = 10;     // batch means per window for the variance of the mean
    bool normalize = true;  // false: raw mean differences instead of z-scores
};

// Compares the mean of the first window against each trailing segment.
// Normalized scores divide by sqrt of the summed variances of the means
// (batch-means estimate); windows with zero variance yield score 0.
// Throws SeriesTooShort below kGewekeMinLength.
std::vector<double> geweke_scores(std::span<const double> series, GewekeOptions opts = {});

// The "no more than max_exceed of the scores beyond +-threshold" rule.
// Throws WrongCount unless exactly `expected_count` scores are given
// (default: the standard 20).
bool converged(const std::vector<double>& scores, double threshold = 0.01,
               int max_exceed = 3, int expected_count = 20);

// First trace length (multiple of check_every) at which the convergence rule
// holds, scanning from the start of the run; nullopt if it never does.
std::optional<long> first_convergence(std::span<const double> trace, double threshold,
                                      long check_every = 1000);

// --- benchmark ---------------------------------------------------------------
struct BenchmarkEntry {
    SamplerConfig config;
    double micros_per_iter = 0.0;
    std::optional<long> converged_at;  // first checkpoint where converged() holds
    double estimate = 0.0;             // post burn-in mean of the tracked scalar
    double acceptance_rate = 0.0;
};

// Runs one chain per config and scans the tracked trace at checkpoints for
// the first length at which the convergence rule holds.
std::vector<BenchmarkEntry> benchmark(const JointDensityTarget& target,
                                      const std::vector<SamplerConfig>& configs,
                                      long check_every = 1000);

// Chain dump: iteration, log_density, assignment entries (column-major),
// then eta entries; header names every column.
void dump_chain_csv(const Chain& chain, std::ostream& os);

}  // namespace ctxfuse
