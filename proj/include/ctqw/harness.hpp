#pragma once

#include "ctqw/config.hpp"
#include "ctqw/parallel.hpp"
#include "ctqw/propagator.hpp"
#include "ctqw/sequence.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ctqw {

/// Progress sink for long experiments; may be empty.
using ProgressFn = std::function<void(const std::string&)>;

// ---------------------------------------------------------------------------
// Parrondo classification

struct ParrondoVerdict {
    double sigma0 = 0.0;
    double sigma_b1 = 0.0;
    double sigma_b2 = 0.0;
    double sigma_switch = 0.0;
    bool paradox = false;
};

/// Both static defects slow (< sigma0) and the switched run fast (> sigma0). Strict comparisons.
inline ParrondoVerdict classify_parrondo(double sigma0, double sigma_b1, double sigma_b2, double sigma_switch)
{
    for (double v : {sigma0, sigma_b1, sigma_b2, sigma_switch}) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument("Parrondo classification needs positive spreads");
        }
    }
    const bool paradox = sigma_b1 < sigma0 && sigma_b2 < sigma0 && sigma_switch > sigma0;
    return {sigma0, sigma_b1, sigma_b2, sigma_switch, paradox};
}

// ---------------------------------------------------------------------------
// Single runs

/// Control word long enough for a run to `horizon` at interval tau.
inline BinarySequence protocol_sequence(const ExperimentConfig& config, SequenceKind kind, double tau,
                                        double horizon, std::uint64_t seed)
{
    const auto length = static_cast<std::size_t>(std::ceil(horizon / tau - 1e-9));
    return generate(kind, std::max<std::size_t>(length, 1), seed, config.periodic_start);
}

inline RunOptions run_options(const ExperimentConfig& config)
{
    RunOptions options;
    options.initial_site = config.initial_site;
    return options;
}

inline SeriesTable run_static(const ExperimentConfig& config, double beta, double horizon, double sample_every)
{
    return run_protocol(config.model_for(horizon), StaticProtocol{beta}, horizon, sample_every, run_options(config));
}

inline SeriesTable run_switching(const ExperimentConfig& config, SequenceKind kind, double tau, double horizon,
                                 double sample_every, std::uint64_t seed = 0)
{
    const auto model = config.model_for(horizon);
    auto protocol = SwitchingProtocol::from_model(protocol_sequence(config, kind, tau, horizon, seed), tau, model);
    return run_protocol(model, protocol, horizon, sample_every, run_options(config));
}

// ---------------------------------------------------------------------------
// Baselines

struct Baselines {
    SeriesTable free;  ///< beta = 0
    SeriesTable beta1; ///< static beta1
    SeriesTable beta2; ///< static beta2
};

/// Static runs at beta = 0, beta1 and beta2 on a shared lattice up to config.t_max.
inline Baselines run_baselines(const ExperimentConfig& config, std::optional<double> sample_every = {})
{
    config.validate();
    const double step = sample_every.value_or(config.sample_every > 0.0 ? config.sample_every : config.t_max / 100.0);
    const std::vector<double> betas{0.0, config.beta1, config.beta2};
    auto tables = parallel_map<SeriesTable>(3, config.threads, [&](std::size_t i) {
        auto table = run_static(config, betas[i], config.t_max, step);
        table.protocol = i == 0 ? "free" : (i == 1 ? "beta1" : "beta2");
        return table;
    });
    return {std::move(tables[0]), std::move(tables[1]), std::move(tables[2])};
}

// ---------------------------------------------------------------------------
// Switching-interval sweep

struct SweepPoint {
    double tau = 0.0;
    double ratio = 0.0; ///< sigma(t_max) / sigma0(t_max); ensemble mean for random
};

struct SweepMember {
    double tau = 0.0;
    std::uint64_t seed = 0;
    double ratio = 0.0;
};

struct ProtocolSweep {
    SequenceKind kind = SequenceKind::Periodic;
    std::vector<SweepPoint> curve;
    std::vector<SweepMember> members; ///< per-seed ratios (random protocol only)
    double tau_star = 0.0;            ///< smallest tau attaining the maximum
    double max_ratio = 0.0;
    /// Maximal run of consecutive grid points with ratio > 1 containing tau_star.
    std::optional<std::pair<double, double>> window;
    /// True when every grid point with ratio > 1 lies inside `window`.
    bool enhancement_contiguous = true;
};

struct SweepResult {
    double t_max = 0.0;
    std::size_t n_sites = 0;
    double sigma0 = 0.0;
    double max_leak = 0.0;
    std::vector<ProtocolSweep> protocols;

    const ProtocolSweep& at(SequenceKind kind) const
    {
        for (const auto& p : protocols) {
            if (p.kind == kind) return p;
        }
        throw std::out_of_range("protocol " + std::string(to_tag(kind)) + " not in sweep");
    }
    bool has(SequenceKind kind) const
    {
        return std::any_of(protocols.begin(), protocols.end(), [&](const auto& p) { return p.kind == kind; });
    }
};

/// Fills tau_star, max_ratio, window and contiguity from the curve.
inline void summarize_curve(ProtocolSweep& sweep)
{
    const auto& c = sweep.curve;
    if (c.empty()) return;
    std::size_t best = 0;
    for (std::size_t i = 1; i < c.size(); ++i) {
        if (c[i].ratio > c[best].ratio) best = i;
    }
    sweep.tau_star = c[best].tau;
    sweep.max_ratio = c[best].ratio;
    sweep.window.reset();
    sweep.enhancement_contiguous = true;
    if (!(c[best].ratio > 1.0)) {
        sweep.enhancement_contiguous = std::none_of(c.begin(), c.end(), [](const auto& p) { return p.ratio > 1.0; });
        return;
    }
    std::size_t lo = best, hi = best;
    while (lo > 0 && c[lo - 1].ratio > 1.0) --lo;
    while (hi + 1 < c.size() && c[hi + 1].ratio > 1.0) ++hi;
    sweep.window = std::make_pair(c[lo].tau, c[hi].tau);
    for (std::size_t i = 0; i < c.size(); ++i) {
        if ((i < lo || i > hi) && c[i].ratio > 1.0) sweep.enhancement_contiguous = false;
    }
}

/**
 * sigma(t_max)/sigma0(t_max) over the tau grid for every configured protocol.
 * Random uses seeds base_seed .. base_seed + random_ensemble_size - 1 at every
 * grid point and reports the mean.
 */
inline SweepResult run_tau_sweep(const ExperimentConfig& config, const ProgressFn& progress = {})
{
    config.validate();
    const auto model = config.model_for(config.t_max);
    SweepResult result;
    result.t_max = config.t_max;
    result.n_sites = model.n_sites;

    const auto baseline = run_static(config, 0.0, config.t_max, config.t_max);
    result.sigma0 = baseline.final().sigma;
    result.max_leak = baseline.max_leak;

    struct Job {
        std::size_t protocol;
        std::size_t tau_index;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (std::size_t p = 0; p < config.protocols.size(); ++p) {
        const bool random = config.protocols[p] == SequenceKind::Random;
        const std::size_t members = random ? config.random_ensemble_size : 1;
        for (std::size_t t = 0; t < config.tau_grid.size(); ++t) {
            for (std::size_t m = 0; m < members; ++m) jobs.push_back({p, t, random ? config.base_seed + m : 0});
        }
    }

    std::atomic<std::size_t> done{0};
    struct Outcome {
        double sigma = 0.0;
        double leak = 0.0;
    };
    const auto outcomes = parallel_map<Outcome>(jobs.size(), config.threads, [&](std::size_t i) {
        const auto& job = jobs[i];
        const auto kind = config.protocols[job.protocol];
        const double tau = config.tau_grid[job.tau_index];
        const auto table = run_switching(config, kind, tau, config.t_max, config.t_max, job.seed);
        const std::size_t finished = ++done;
        if (progress && (finished % 50 == 0 || finished == jobs.size())) {
            progress("sweep " + std::to_string(finished) + "/" + std::to_string(jobs.size()));
        }
        return Outcome{table.final().sigma, table.max_leak};
    });

    for (std::size_t p = 0; p < config.protocols.size(); ++p) {
        ProtocolSweep sweep;
        sweep.kind = config.protocols[p];
        for (std::size_t t = 0; t < config.tau_grid.size(); ++t) sweep.curve.push_back({config.tau_grid[t], 0.0});
        std::vector<std::size_t> counts(config.tau_grid.size(), 0);
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            if (jobs[i].protocol != p) continue;
            const double ratio = outcomes[i].sigma / result.sigma0;
            result.max_leak = std::max(result.max_leak, outcomes[i].leak);
            sweep.curve[jobs[i].tau_index].ratio += ratio;
            ++counts[jobs[i].tau_index];
            if (sweep.kind == SequenceKind::Random) {
                sweep.members.push_back({config.tau_grid[jobs[i].tau_index], jobs[i].seed, ratio});
            }
        }
        for (std::size_t t = 0; t < counts.size(); ++t) sweep.curve[t].ratio /= static_cast<double>(counts[t]);
        summarize_curve(sweep);
        result.protocols.push_back(std::move(sweep));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Long time series

struct SeriesBundle {
    double t_max = 0.0;
    std::size_t n_sites = 0;
    double max_leak = 0.0;
    double max_norm_drift = 0.0;
    SeriesTable free;                 ///< defect-free reference
    std::vector<SeriesTable> tables;  ///< one per protocol; random = ensemble mean
    std::vector<SeriesTable> members; ///< random ensemble members

    const SeriesTable& at(SequenceKind kind) const
    {
        const std::string tag(to_tag(kind));
        for (const auto& t : tables) {
            if (t.protocol == tag) return t;
        }
        throw std::out_of_range("protocol " + tag + " not in series bundle");
    }
};

/// Sample-wise mean of equally sampled tables.
inline SeriesTable mean_table(const std::vector<SeriesTable>& runs)
{
    if (runs.empty()) throw std::invalid_argument("cannot average an empty ensemble");
    SeriesTable mean = runs.front();
    mean.seed.reset();
    for (std::size_t r = 1; r < runs.size(); ++r) {
        if (runs[r].samples.size() != mean.samples.size()) {
            throw std::invalid_argument("ensemble members are sampled differently");
        }
        for (std::size_t s = 0; s < mean.samples.size(); ++s) {
            auto& m = mean.samples[s];
            const auto& x = runs[r].samples[s];
            m.sigma += x.sigma;
            m.entropy += x.entropy;
            m.ipr += x.ipr;
            m.leak += x.leak;
        }
        mean.max_norm_drift = std::max(mean.max_norm_drift, runs[r].max_norm_drift);
        mean.max_leak = std::max(mean.max_leak, runs[r].max_leak);
    }
    const double inv = 1.0 / static_cast<double>(runs.size());
    for (auto& m : mean.samples) {
        m.sigma *= inv;
        m.entropy *= inv;
        m.ipr *= inv;
        m.leak *= inv;
    }
    return mean;
}

/**
 * sigma, S and IPR up to config.t_series for each protocol at its own tau.
 * Samples every config.sample_every (or every tau when that is 0).
 */
inline SeriesBundle run_time_series(const ExperimentConfig& config, const std::map<SequenceKind, double>& tau_star,
                                    const ProgressFn& progress = {})
{
    config.validate();
    const double horizon = config.t_series;
    SeriesBundle bundle;
    bundle.t_max = horizon;
    bundle.n_sites = config.model_for(horizon).n_sites;

    struct Job {
        SequenceKind kind;
        double tau;
        std::uint64_t seed;
        bool free;
    };
    std::vector<Job> jobs{{SequenceKind::Periodic, 0.0, 0, true}};
    for (auto kind : config.protocols) {
        const auto it = tau_star.find(kind);
        if (it == tau_star.end()) {
            throw std::invalid_argument("no switching interval given for protocol " + std::string(to_tag(kind)));
        }
        const std::size_t members = kind == SequenceKind::Random ? config.random_ensemble_size : 1;
        for (std::size_t m = 0; m < members; ++m) {
            jobs.push_back({kind, it->second, kind == SequenceKind::Random ? config.base_seed + m : 0, false});
        }
    }

    std::atomic<std::size_t> done{0};
    auto runs = parallel_map<SeriesTable>(jobs.size(), config.threads, [&](std::size_t i) {
        const auto& job = jobs[i];
        SeriesTable table;
        if (job.free) {
            const double step = config.sample_every > 0.0 ? config.sample_every : 1.0;
            table = run_static(config, 0.0, horizon, step);
            table.protocol = "free";
        } else {
            const double step = config.sample_every > 0.0 ? config.sample_every : job.tau;
            table = run_switching(config, job.kind, job.tau, horizon, step, job.seed);
        }
        const std::size_t finished = ++done;
        if (progress && (finished % 10 == 0 || finished == jobs.size())) {
            progress("series " + std::to_string(finished) + "/" + std::to_string(jobs.size()));
        }
        return table;
    });

    for (const auto& r : runs) {
        bundle.max_leak = std::max(bundle.max_leak, r.max_leak);
        bundle.max_norm_drift = std::max(bundle.max_norm_drift, r.max_norm_drift);
    }
    bundle.free = std::move(runs.front());
    std::vector<SeriesTable> random_runs;
    for (std::size_t i = 1; i < runs.size(); ++i) {
        if (jobs[i].kind == SequenceKind::Random) {
            random_runs.push_back(std::move(runs[i]));
        } else {
            bundle.tables.push_back(std::move(runs[i]));
        }
    }
    if (!random_runs.empty()) {
        bundle.tables.push_back(mean_table(random_runs));
        bundle.members = std::move(random_runs);
    }
    return bundle;
}

// ---------------------------------------------------------------------------
// Random-ensemble histogram

struct HistogramResult {
    double tau = 0.0;
    double t_max = 0.0;
    double sigma0 = 0.0;
    std::vector<SweepMember> members;       ///< one ratio per seed
    std::vector<double> edges;              ///< bins + 1 uniform edges over the observed range
    std::vector<std::size_t> counts;
    double mode = 0.0;                      ///< center of the most populated bin (lowest on ties)
    double mean = 0.0;
    std::map<SequenceKind, std::pair<double, double>> references; ///< kind -> (tau, ratio)
    double max_leak = 0.0;
};

/// Uniform binning of `values` into `bins` bins spanning [min, max].
inline void bin_values(const std::vector<double>& values, std::size_t bins, std::vector<double>& edges,
                       std::vector<std::size_t>& counts)
{
    if (values.empty() || bins == 0) throw std::invalid_argument("histogram needs values and bins");
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    double lo = *lo_it, hi = *hi_it;
    if (hi == lo) {
        lo -= 0.5e-6;
        hi += 0.5e-6;
    }
    edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) {
        edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
    }
    counts.assign(bins, 0);
    for (double v : values) {
        auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
        counts[std::min(b, bins - 1)]++;
    }
}

/**
 * sigma/sigma0 at config.t_series for histogram_ensemble_size random seeds at
 * interval tau, plus reference ratios of the deterministic protocols. References
 * already known (e.g. from a time-series bundle) can be passed in; missing ones
 * are computed from `reference_taus`.
 */
inline HistogramResult run_random_histogram(const ExperimentConfig& config, double tau,
                                            const std::map<SequenceKind, double>& reference_taus,
                                            std::map<SequenceKind, double> known_ratios = {},
                                            const ProgressFn& progress = {})
{
    config.validate();
    if (!(tau > 0.0)) throw std::invalid_argument("histogram tau must be positive");
    const double horizon = config.t_series;
    HistogramResult result;
    result.tau = tau;
    result.t_max = horizon;

    const auto baseline = run_static(config, 0.0, horizon, horizon);
    result.sigma0 = baseline.final().sigma;
    result.max_leak = baseline.max_leak;

    struct Job {
        SequenceKind kind;
        double tau;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (std::size_t m = 0; m < config.histogram_ensemble_size; ++m) {
        jobs.push_back({SequenceKind::Random, tau, config.base_seed + m});
    }
    for (const auto& [kind, ref_tau] : reference_taus) {
        if (kind == SequenceKind::Random) continue;
        if (!known_ratios.contains(kind)) jobs.push_back({kind, ref_tau, 0});
    }

    std::atomic<std::size_t> done{0};
    const auto outcomes = parallel_map<std::pair<double, double>>(jobs.size(), config.threads, [&](std::size_t i) {
        const auto table = run_switching(config, jobs[i].kind, jobs[i].tau, horizon, horizon, jobs[i].seed);
        const std::size_t finished = ++done;
        if (progress && (finished % 10 == 0 || finished == jobs.size())) {
            progress("histogram " + std::to_string(finished) + "/" + std::to_string(jobs.size()));
        }
        return std::make_pair(table.final().sigma / result.sigma0, table.max_leak);
    });

    std::vector<double> ratios;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        result.max_leak = std::max(result.max_leak, outcomes[i].second);
        if (jobs[i].kind == SequenceKind::Random) {
            result.members.push_back({tau, jobs[i].seed, outcomes[i].first});
            ratios.push_back(outcomes[i].first);
        } else {
            known_ratios[jobs[i].kind] = outcomes[i].first;
        }
    }
    for (const auto& [kind, ref_tau] : reference_taus) {
        if (kind != SequenceKind::Random) result.references[kind] = {ref_tau, known_ratios.at(kind)};
    }

    bin_values(ratios, config.histogram_bins, result.edges, result.counts);
    std::size_t best = 0;
    for (std::size_t b = 1; b < result.counts.size(); ++b) {
        if (result.counts[b] > result.counts[best]) best = b;
    }
    result.mode = 0.5 * (result.edges[best] + result.edges[best + 1]);
    double sum = 0.0;
    for (double r : ratios) sum += r;
    result.mean = sum / static_cast<double>(ratios.size());
    return result;
}

// ---------------------------------------------------------------------------
// Single Parrondo check

struct ParrondoRun {
    SequenceKind kind = SequenceKind::Periodic;
    double tau = 0.0;
    std::uint64_t seed = 0;
    Baselines baselines;
    SeriesTable switching;
    ParrondoVerdict verdict;
};

/// Baselines plus one switching run at config.tau, classified at t_max.
inline ParrondoRun run_parrondo(const ExperimentConfig& config, SequenceKind kind, std::uint64_t seed = 0)
{
    config.validate();
    ParrondoRun run;
    run.kind = kind;
    run.tau = config.tau;
    run.seed = kind == SequenceKind::Random ? seed : 0;
    run.baselines = run_baselines(config);
    const double step = config.sample_every > 0.0 ? config.sample_every : config.tau;
    run.switching = run_switching(config, kind, config.tau, config.t_max, step, run.seed);
    run.verdict = classify_parrondo(run.baselines.free.final().sigma, run.baselines.beta1.final().sigma,
                                    run.baselines.beta2.final().sigma, run.switching.final().sigma);
    return run;
}

} // namespace ctqw
