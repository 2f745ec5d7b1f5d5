#ifndef SNIPS_SAMPLER_HPP
#define SNIPS_SAMPLER_HPP

// Annealed Langevin posterior sampler. The iterate lives in the V-domain and is
// rotated to signal space only to query the prior and to emit snapshots.

#include "score.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <optional>
#include <thread>
#include <variant>

namespace snips {

enum class TracePolicy { None, PerLevel, PerStep };

struct SamplerConfig {
    NoiseSchedule schedule;
    std::uint64_t seed = 0;
    TracePolicy trace = TracePolicy::None;
    std::optional<Vector> init; // signal-space start; U[0,1]^N when empty
};

struct LevelDiagnostics {
    double sigma = 0.0;
    double mean_abs_score = 0.0;
    std::size_t step_floor_hits = 0;
    std::size_t capped_weights = 0;
    std::size_t zero_count = 0;
    std::size_t less_count = 0;
    std::size_t greater_count = 0;
};

struct Snapshot {
    std::size_t level = 0;
    std::size_t step = 0; // τ for per-level snapshots
    Vector x;
};

struct SampleResult {
    Vector sample;
    std::vector<Snapshot> trace;
    std::uint64_t rng_seed_used = 0;
    std::vector<LevelDiagnostics> diagnostics;
};

/// Shared, chain-independent precomputation for one (H, y) pair.
struct SamplerProblem {
    const DegradationSVD& svd;
    Vector y_t_padded;

    SamplerProblem(const DegradationSVD& svd_, const Eigen::Ref<const Vector>& y)
        : svd(svd_), y_t_padded(svd_.project_measurement(y)) {}
};

namespace detail {

inline void check_dims(const DegradationSVD& svd, const Eigen::Ref<const Vector>& y, const ScoreModel& prior,
                       const SamplerConfig& cfg) {
    if (y.size() != svd.rows())
        throw ArgumentError("sampler: measurement length " + std::to_string(y.size()) + " does not match operator rows " +
                            std::to_string(svd.rows()));
    if (prior.dim() != svd.cols())
        throw ArgumentError("sampler: prior dimension " + std::to_string(prior.dim()) +
                            " does not match operator columns " + std::to_string(svd.cols()));
    if (cfg.init && cfg.init->size() != svd.cols()) throw ArgumentError("sampler: init vector has wrong length");
}

inline SampleResult run_chain(const SamplerProblem& problem, const ScoreModel& prior, const SamplerConfig& cfg,
                              std::uint64_t seed) {
    const DegradationSVD& svd = problem.svd;
    const NoiseSchedule& schedule = cfg.schedule;
    const Index n = svd.cols();
    const Matrix& v = svd.v;
    const double c = schedule.c();
    const double sigma0 = schedule.sigma0();

    Rng rng(seed);
    std::normal_distribution<double> normal;

    Vector x(n);
    if (cfg.init) {
        x = *cfg.init;
    } else {
        std::uniform_real_distribution<double> uniform(0.0, 1.0);
        for (Index j = 0; j < n; ++j) x[j] = uniform(rng);
    }
    Vector x_t = v.transpose() * x;

    SampleResult result;
    result.rng_seed_used = seed;
    result.diagnostics.reserve(schedule.size());

    Vector prior_s(n);
    Vector prior_t = Vector::Zero(n);
    Vector d(n);
    Vector noise_scale(n);
    Vector drift_scale(n);

    for (std::size_t level = 0; level < schedule.size(); ++level) {
        const double sigma_i = schedule.level(level);
        const SpectrumPartition partition = partition_spectrum(sigma_i, sigma0, svd, level);
        const StepSizeVector alpha = step_sizes(sigma_i, sigma0, svd, partition);
        drift_scale = c * alpha.values;
        noise_scale = (2.0 * c * alpha.values).cwiseSqrt();
        const bool needs_prior = partition.greater.size() != static_cast<std::size_t>(n);

        LevelDiagnostics diag;
        diag.sigma = sigma_i;
        diag.step_floor_hits = alpha.floor_hits;
        diag.zero_count = partition.zero.size();
        diag.less_count = partition.less.size();
        diag.greater_count = partition.greater.size();
        ScoreDiagnostics score_diag;
        double abs_score_sum = 0.0;

        for (std::size_t step = 0; step < schedule.tau(); ++step) {
            if (needs_prior) {
                x.noalias() = v * x_t;
                prior.score_into(x, sigma_i, prior_s);
                prior_t.noalias() = v.transpose() * prior_s;
            }
            conditional_score_vdomain(problem.y_t_padded, x_t, prior_t, sigma_i, sigma0, svd.extended_singulars,
                                      partition, d, &score_diag);
            for (Index j = 0; j < n; ++j) x_t[j] += drift_scale[j] * d[j] + noise_scale[j] * normal(rng);
            if (!x_t.allFinite()) throw DivergenceError(level, step);
            abs_score_sum += d.cwiseAbs().mean();

            if (cfg.trace == TracePolicy::PerStep) result.trace.push_back({level, step, v * x_t});
        }
        if (cfg.trace == TracePolicy::PerLevel) result.trace.push_back({level, schedule.tau(), v * x_t});

        diag.capped_weights = score_diag.capped_weights;
        diag.mean_abs_score = abs_score_sum / static_cast<double>(schedule.tau());
        result.diagnostics.push_back(diag);
    }
    result.sample = v * x_t;
    if (!result.sample.allFinite()) throw DivergenceError(schedule.size() - 1, schedule.tau() - 1);
    return result;
}

} // namespace detail

/// One SNIPS chain. Deterministic given cfg.seed.
inline SampleResult snips_sample(const DegradationSVD& svd, const Eigen::Ref<const Vector>& y, const ScoreModel& prior,
                                 const SamplerConfig& cfg) {
    detail::check_dims(svd, y, prior, cfg);
    const SamplerProblem problem(svd, y);
    return detail::run_chain(problem, prior, cfg, cfg.seed);
}

/// Seed of chain k under master seed `master`; independent of the total chain count.
inline std::uint64_t chain_seed(std::uint64_t master, std::size_t k) { return derive_seed(master, k); }

struct ChainOutcome {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    std::optional<SampleResult> result;
    std::string error; // non-empty when the chain failed
    bool ok() const noexcept { return result.has_value(); }
};

struct ManyResult {
    std::vector<ChainOutcome> chains;
    Vector mean; // over successful chains
    Vector std;  // unbiased per-coordinate std; zero when only one chain succeeded
    std::size_t succeeded = 0;

    std::vector<Vector> samples() const {
        std::vector<Vector> out;
        for (const auto& c : chains)
            if (c.ok()) out.push_back(c.result->sample);
        return out;
    }
};

inline ManyResult aggregate_chains(std::vector<ChainOutcome> chains, Index n) {
    ManyResult out;
    out.chains = std::move(chains);
    out.mean = Vector::Zero(n);
    out.std = Vector::Zero(n);
    for (const auto& c : out.chains) {
        if (!c.ok()) continue;
        ++out.succeeded;
        out.mean += c.result->sample;
    }
    if (out.succeeded == 0) return out;
    out.mean /= static_cast<double>(out.succeeded);
    if (out.succeeded > 1) {
        for (const auto& c : out.chains)
            if (c.ok()) out.std += (c.result->sample - out.mean).cwiseAbs2();
        out.std = (out.std / static_cast<double>(out.succeeded - 1)).cwiseSqrt();
    }
    return out;
}

/// Independent chains with seeds chain_seed(cfg.seed, k). Chains run on up to
/// `workers` threads when the prior is thread-safe, otherwise sequentially.
/// A failing chain is recorded in its outcome; the others still run.
inline ManyResult snips_sample_many(const DegradationSVD& svd, const Eigen::Ref<const Vector>& y,
                                    const ScoreModel& prior, const SamplerConfig& cfg, std::size_t count,
                                    std::size_t workers = 1) {
    if (count < 1) throw ArgumentError("sampler: chain count must be at least 1");
    detail::check_dims(svd, y, prior, cfg);
    const SamplerProblem problem(svd, y);

    std::vector<ChainOutcome> chains(count);
    auto run_one = [&](std::size_t k) {
        ChainOutcome& out = chains[k];
        out.index = k;
        out.seed = chain_seed(cfg.seed, k);
        try {
            out.result = detail::run_chain(problem, prior, cfg, out.seed);
        } catch (const std::exception& e) {
            out.error = e.what();
        }
    };

    if (!prior.thread_safe()) workers = 1;
    workers = std::clamp<std::size_t>(workers, 1, count);
    if (workers == 1) {
        for (std::size_t k = 0; k < count; ++k) run_one(k);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t k = next++; k < count; k = next++) run_one(k);
            });
    }
    return aggregate_chains(std::move(chains), svd.cols());
}

} // namespace snips

#endif // SNIPS_SAMPLER_HPP
