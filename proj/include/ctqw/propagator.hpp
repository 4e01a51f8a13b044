#pragma once

#include "ctqw/errors.hpp"
#include "ctqw/hamiltonian.hpp"
#include "ctqw/observables.hpp"
#include "ctqw/sequence.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace ctqw {

using Complex = std::complex<double>;

struct WaveState {
    std::vector<Complex> amplitudes;
    double time = 0.0;

    std::size_t size() const { return amplitudes.size(); }
    double norm_squared() const
    {
        double s = 0.0;
        for (const auto& a : amplitudes) s += std::norm(a);
        return s;
    }
};

/// Site-localized start at lattice label `site`.
inline WaveState initial_state(const LatticeModel& model, long site)
{
    model.validate();
    if (!model.contains(site)) {
        throw std::invalid_argument("initial site " + std::to_string(site) + " is outside the lattice");
    }
    WaveState state{std::vector<Complex>(model.n_sites, Complex{}), 0.0};
    state.amplitudes[model.index_of(site)] = 1.0;
    return state;
}

inline WaveState initial_state(const LatticeModel& model) { return initial_state(model, model.defect_site); }

/// Coefficients whose magnitude falls below this (past the transition region) end the series.
inline constexpr double series_truncation = 1e-15;

/// Hard cap on series length for a step of spectral width `scaled_time` = norm_bound * dt.
inline std::size_t series_term_cap(double scaled_time)
{
    return static_cast<std::size_t>(std::ceil(4.0 * scaled_time)) + 200;
}

/**
 * Bessel values J_0(z) ... J_{K-1}(z) of the Chebyshev expansion
 *
 *   exp(-i z x) = J_0(z) + 2 sum_k (-i)^k J_k(z) T_k(x),   x in [-1, 1],
 *
 * truncated at the first order K > z with |J_K| < series_truncation.
 * Computed by Miller's downward recurrence normalized with J_0 + 2 sum J_2k = 1.
 */
inline std::vector<double> bessel_series(double z)
{
    if (!(z >= 0.0) || !std::isfinite(z)) {
        throw std::invalid_argument("series argument must be finite and non-negative");
    }
    if (z == 0.0) return {1.0};

    // Start far enough past the turning point k = z that the seed is below 1e-40
    // relative; the Airy transition width scales as (z/2)^(1/3).
    auto start = static_cast<std::size_t>(std::ceil(z + 30.0 * std::cbrt(z / 2.0 + 1.0) + 40.0));
    if (start % 2 == 1) ++start;

    std::vector<double> j(start + 2, 0.0);
    j[start + 1] = 0.0;
    j[start] = 1e-300;
    for (std::size_t k = start; k >= 1; --k) {
        j[k - 1] = (2.0 * static_cast<double>(k) / z) * j[k] - j[k + 1];
        if (std::abs(j[k - 1]) > 1e250) {
            for (std::size_t i = k - 1; i <= start; ++i) j[i] *= 1e-250;
        }
    }
    double norm = j[0];
    for (std::size_t k = 2; k <= start; k += 2) norm += 2.0 * j[k];
    for (auto& v : j) v /= norm;

    std::size_t terms = 0;
    for (std::size_t k = 0; k <= start; ++k) {
        if (static_cast<double>(k) > z && std::abs(j[k]) < series_truncation) {
            terms = k;
            break;
        }
    }
    if (terms == 0 || terms > series_term_cap(z)) {
        throw NumericalFailure("Chebyshev series for z=" + std::to_string(z) + " did not converge within " +
                               std::to_string(series_term_cap(z)) + " terms");
    }
    j.resize(terms);
    return j;
}

namespace detail {

    // One Chebyshev step on sites [lo, hi]: next = twice * x cur - prev, acc += c next.
    inline void chebyshev_term(std::size_t lo, std::size_t hi, double twice, double c_re, double c_im,
                               const double* __restrict dg, const double* __restrict lw,
                               const double* __restrict up, const double* __restrict cr,
                               const double* __restrict ci, const double* __restrict pr,
                               const double* __restrict pi, double* __restrict nr, double* __restrict ni,
                               double* __restrict ar, double* __restrict ai)
    {
        for (std::size_t j = lo; j <= hi; ++j) {
            const double xr = dg[j] * cr[j] + lw[j] * cr[j - 1] + up[j] * cr[j + 1];
            const double xi = dg[j] * ci[j] + lw[j] * ci[j - 1] + up[j] * ci[j + 1];
            const double tr = twice * xr - pr[j];
            const double ti = twice * xi - pi[j];
            nr[j] = tr;
            ni[j] = ti;
            ar[j] += c_re * tr - c_im * ti;
            ai[j] += c_re * ti + c_im * tr;
        }
    }

} // namespace detail

/// Tridiagonal operator laid out for the series kernel: padded, rescaled by 1/norm_bound.
class ScaledOperator {
public:
    explicit ScaledOperator(const TridiagonalOperator& h)
        : n_(h.size())
        , scale_(h.norm_bound())
        , diag_(h.size(), 0.0)
        , lower_(h.size(), 0.0)
        , upper_(h.size(), 0.0)
    {
        const double inv = scale_ > 0.0 ? 1.0 / scale_ : 0.0;
        const auto d = h.diagonal();
        const auto o = h.off_diagonal();
        for (std::size_t j = 0; j < n_; ++j) {
            diag_[j] = d[j] * inv;
            if (j > 0) lower_[j] = o[j - 1] * inv;
            if (j + 1 < n_) upper_[j] = o[j] * inv;
        }
    }

    std::size_t size() const { return n_; }
    double scale() const { return scale_; }
    const double* diag() const { return diag_.data(); }
    const double* lower() const { return lower_.data(); }
    const double* upper() const { return upper_.data(); }

private:
    std::size_t n_;
    double scale_;
    std::vector<double> diag_, lower_, upper_;
};

/**
 * Stateful exp(-iH dt) stepper.
 *
 * Amplitudes are held as separate real and imaginary arrays (H is real, so both
 * parts follow the same recurrence) with one ghost zero at each end. Only the
 * window of sites carrying probability above support_floor is updated; the
 * window grows by one site per series term and is trimmed after each step.
 */
class SpectralPropagator {
public:
    static constexpr double support_floor = 1e-30;

    explicit SpectralPropagator(const WaveState& state)
        : n_(state.size())
        , time_(state.time)
    {
        if (n_ == 0) {
            throw std::invalid_argument("cannot propagate an empty state");
        }
        for (auto* buf : {&re_, &im_, &prev_re_, &prev_im_, &cur_re_, &cur_im_, &next_re_, &next_im_}) {
            buf->assign(n_ + 2, 0.0);
        }
        for (std::size_t j = 0; j < n_; ++j) {
            re_[j + 1] = state.amplitudes[j].real();
            im_[j + 1] = state.amplitudes[j].imag();
        }
        trim_support();
    }

    std::size_t size() const { return n_; }
    double time() const { return time_; }
    /// Inclusive site-index range outside which every amplitude is exactly zero.
    std::pair<std::size_t, std::size_t> support() const { return {lo_, hi_}; }

    void advance(const ScaledOperator& h, double dt)
    {
        if (!(dt > 0.0) || !std::isfinite(dt)) {
            throw std::invalid_argument("time step must be positive and finite");
        }
        if (h.size() != n_) {
            throw std::invalid_argument("operator size does not match state size");
        }
        time_ += dt;
        if (h.scale() == 0.0 || empty_) return;

        const auto coeff = bessel_series(h.scale() * dt);
        const std::size_t terms = coeff.size();

        // Buffer indices are site + 1.
        std::size_t lo = lo_ + 1;
        std::size_t hi = hi_ + 1;
        const std::size_t reach_lo = lo > terms ? lo - terms : 1;
        const std::size_t reach_hi = std::min(hi + terms, n_);
        for (auto* buf : {&prev_re_, &prev_im_, &cur_re_, &cur_im_, &next_re_, &next_im_}) {
            std::fill(buf->begin() + static_cast<std::ptrdiff_t>(reach_lo - 1),
                      buf->begin() + static_cast<std::ptrdiff_t>(reach_hi + 2), 0.0);
        }

        const double* dg = h.diag() - 1;
        const double* lw = h.lower() - 1;
        const double* up = h.upper() - 1;

        // T_0 = psi; accumulator starts at J_0 psi.
        double* cr = cur_re_.data();
        double* ci = cur_im_.data();
        double* pr = prev_re_.data();
        double* pi = prev_im_.data();
        double* nr = next_re_.data();
        double* ni = next_im_.data();
        double* ar = re_.data();
        double* ai = im_.data();
        for (std::size_t j = lo; j <= hi; ++j) {
            cr[j] = ar[j];
            ci[j] = ai[j];
            ar[j] *= coeff[0];
            ai[j] *= coeff[0];
        }

        for (std::size_t k = 1; k < terms; ++k) {
            const double twice = (k == 1) ? 1.0 : 2.0; // T_1 = x T_0, T_{k+1} = 2x T_k - T_{k-1}
            // 2 J_k (-i)^k = c_re + i c_im
            const double mag = 2.0 * coeff[k];
            double c_re = 0.0, c_im = 0.0;
            switch (k % 4) {
            case 0: c_re = mag; break;
            case 1: c_im = -mag; break;
            case 2: c_re = -mag; break;
            default: c_im = mag; break;
            }
            if (lo > 1) --lo;
            if (hi < n_) ++hi;
            detail::chebyshev_term(lo, hi, twice, c_re, c_im, dg, lw, up, cr, ci, pr, pi, nr, ni, ar, ai);
            // rotate prev <- cur <- next
            std::swap(pr, cr);
            std::swap(cr, nr);
            std::swap(pi, ci);
            std::swap(ci, ni);
        }
        lo_ = lo - 1;
        hi_ = hi - 1;
        trim_support();
    }

    WaveState state() const
    {
        WaveState out{std::vector<Complex>(n_, Complex{}), time_};
        if (!empty_) {
            for (std::size_t j = lo_; j <= hi_; ++j) out.amplitudes[j] = {re_[j + 1], im_[j + 1]};
        }
        return out;
    }

    std::vector<double> probabilities() const
    {
        std::vector<double> p(n_, 0.0);
        if (!empty_) {
            for (std::size_t j = lo_; j <= hi_; ++j) p[j] = re_[j + 1] * re_[j + 1] + im_[j + 1] * im_[j + 1];
        }
        return p;
    }

    double norm_squared() const
    {
        double s = 0.0;
        if (!empty_) {
            for (std::size_t j = lo_; j <= hi_; ++j) s += re_[j + 1] * re_[j + 1] + im_[j + 1] * im_[j + 1];
        }
        return s;
    }

    /// Diagnostics over the support window with centered labels.
    ObservableRecord measure() const
    {
        ObservableRecord rec;
        rec.t = time_;
        if (empty_) return rec;
        const double half = static_cast<double>(n_ - 1) / 2.0;
        double first = 0.0, second = 0.0, entropy = 0.0, sum_sq = 0.0;
        for (std::size_t j = lo_; j <= hi_; ++j) {
            const double p = re_[j + 1] * re_[j + 1] + im_[j + 1] * im_[j + 1];
            const double x = static_cast<double>(j) - half;
            first += x * p;
            second += x * x * p;
            sum_sq += p * p;
            if (p >= 1e-300) entropy -= p * std::log10(p);
        }
        const double variance = second - first * first;
        if (variance < -1e-12) {
            throw NumericalInconsistency("negative position variance " + std::to_string(variance));
        }
        rec.sigma = variance > 0.0 ? std::sqrt(variance) : 0.0;
        rec.entropy = entropy;
        rec.ipr = 1.0 / sum_sq;
        constexpr std::size_t edge = 10;
        for (std::size_t j = lo_; j <= hi_; ++j) {
            if (j < edge || j + edge >= n_) rec.leak += re_[j + 1] * re_[j + 1] + im_[j + 1] * im_[j + 1];
        }
        return rec;
    }

private:
    void trim_support()
    {
        std::size_t first = n_, last = 0;
        for (std::size_t j = empty_ ? 0 : lo_; j <= (empty_ ? n_ - 1 : hi_); ++j) {
            const double p = re_[j + 1] * re_[j + 1] + im_[j + 1] * im_[j + 1];
            if (p > support_floor) {
                if (first == n_) first = j;
                last = j;
            }
        }
        const std::size_t old_lo = empty_ ? 0 : lo_;
        const std::size_t old_hi = empty_ ? n_ - 1 : hi_;
        if (first == n_) {
            empty_ = true;
            std::fill(re_.begin(), re_.end(), 0.0);
            std::fill(im_.begin(), im_.end(), 0.0);
            return;
        }
        for (std::size_t j = old_lo; j < first; ++j) re_[j + 1] = im_[j + 1] = 0.0;
        for (std::size_t j = last + 1; j <= old_hi; ++j) re_[j + 1] = im_[j + 1] = 0.0;
        lo_ = first;
        hi_ = last;
        empty_ = false;
    }

    std::size_t n_;
    double time_;
    std::size_t lo_ = 0, hi_ = 0;
    bool empty_ = true;
    std::vector<double> re_, im_;
    std::vector<double> prev_re_, prev_im_, cur_re_, cur_im_, next_re_, next_im_;
};

/// exp(-i H dt) psi by the Chebyshev series.
inline WaveState evolve_interval(const WaveState& state, const TridiagonalOperator& h, double dt)
{
    if (state.size() != h.size()) {
        throw std::invalid_argument("operator size does not match state size");
    }
    SpectralPropagator prop(state);
    prop.advance(ScaledOperator(h), dt);
    return prop.state();
}

/// Largest lattice the dense oracle accepts.
inline constexpr std::size_t eigen_oracle_max_sites = 512;

/// Reference propagation via full diagonalization, H = V E V^T. Test use only.
inline WaveState eigen_oracle(const TridiagonalOperator& h, double dt, const WaveState& state)
{
    const std::size_t n = h.size();
    if (n > eigen_oracle_max_sites) {
        throw std::invalid_argument("eigen oracle is limited to " + std::to_string(eigen_oracle_max_sites) + " sites");
    }
    if (state.size() != n) {
        throw std::invalid_argument("operator size does not match state size");
    }
    Eigen::VectorXd diag(static_cast<Eigen::Index>(n));
    Eigen::VectorXd sub(static_cast<Eigen::Index>(n > 1 ? n - 1 : 0));
    for (std::size_t i = 0; i < n; ++i) diag[static_cast<Eigen::Index>(i)] = h.diagonal()[i];
    for (std::size_t i = 0; i + 1 < n; ++i) sub[static_cast<Eigen::Index>(i)] = h.off_diagonal()[i];

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) {
        throw NumericalFailure("tridiagonal eigensolver did not converge");
    }
    const Eigen::MatrixXcd vecs = solver.eigenvectors().cast<Complex>();
    Eigen::VectorXcd psi(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) psi[static_cast<Eigen::Index>(i)] = state.amplitudes[i];

    Eigen::VectorXcd coeffs = vecs.transpose() * psi;
    for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
        coeffs[i] *= std::exp(Complex{0.0, -solver.eigenvalues()[i] * dt});
    }
    const Eigen::VectorXcd out = vecs * coeffs;

    WaveState result{std::vector<Complex>(n), state.time + dt};
    for (std::size_t i = 0; i < n; ++i) result.amplitudes[i] = out[static_cast<Eigen::Index>(i)];
    return result;
}

/// Time-independent defect of fixed intensity (beta = 0 is the defect-free chain).
struct StaticProtocol {
    double beta = 0.0;
};

/**
 * Defect intensity beta1 while s_n = 1 and beta2 while s_n = 0, on [n tau, (n+1) tau).
 */
struct SwitchingProtocol {
    BinarySequence sequence;
    double tau;
    double beta1;
    double beta2;

    SwitchingProtocol(BinarySequence seq, double tau_, double beta_one, double beta_zero)
        : sequence(std::move(seq))
        , tau(tau_)
        , beta1(beta_one)
        , beta2(beta_zero)
    {
        if (!(tau > 0.0) || !std::isfinite(tau)) {
            throw std::invalid_argument("switching interval tau must be positive");
        }
    }

    static SwitchingProtocol from_model(BinarySequence seq, double tau, const LatticeModel& model)
    {
        return {std::move(seq), tau, model.beta1, model.beta2};
    }

    double beta_for_symbol(std::uint8_t s) const { return s == 1 ? beta1 : beta2; }
    double beta_at_interval(std::size_t n) const { return beta_for_symbol(sequence[n]); }

    /// Number of intervals (and so symbols) a run to t_max touches.
    std::size_t intervals_for(double t_max) const
    {
        return static_cast<std::size_t>(std::ceil(t_max / tau - 1e-9));
    }
};

using Protocol = std::variant<StaticProtocol, SwitchingProtocol>;

/// Sampled observables of one run.
struct SeriesTable {
    std::string protocol;
    double tau = 0.0; ///< 0 for static runs
    std::optional<std::uint64_t> seed;
    std::size_t n_sites = 0;
    double max_norm_drift = 0.0;
    double max_leak = 0.0;
    std::vector<ObservableRecord> samples;

    const ObservableRecord& final() const { return samples.back(); }
};

struct RunOptions {
    /// Label of the initially occupied site; defaults to the defect site.
    std::optional<long> initial_site;
    /// Leak above this at any sample raises LatticeTooSmall. Negative disables the guard.
    double leak_limit = 1e-8;
    /// Called at every sample with the current state (for tests and probes).
    std::function<void(const WaveState&)> observer;
};

namespace detail {

    inline std::string protocol_tag(const Protocol& protocol)
    {
        if (const auto* sw = std::get_if<SwitchingProtocol>(&protocol)) {
            return std::string(to_tag(sw->sequence.kind()));
        }
        return "static";
    }

} // namespace detail

/**
 * Evolves the site-localized start under the protocol to t_max, sampling at
 * 0, sample_every, 2 sample_every, ... and at t_max. Steps are split exactly at
 * switch times and sample times, so no interpolation happens.
 */
inline SeriesTable run_protocol(const LatticeModel& model, const Protocol& protocol, double t_max, double sample_every,
                                const RunOptions& options = {})
{
    model.validate();
    if (!(t_max > 0.0) || !std::isfinite(t_max)) {
        throw std::invalid_argument("t_max must be positive");
    }
    if (!(sample_every > 0.0) || !std::isfinite(sample_every)) {
        throw std::invalid_argument("sample_every must be positive");
    }

    SeriesTable table;
    table.protocol = detail::protocol_tag(protocol);
    table.n_sites = model.n_sites;

    const auto* switching = std::get_if<SwitchingProtocol>(&protocol);
    double tau = std::numeric_limits<double>::infinity();
    std::vector<ScaledOperator> ops;
    // ops[0] <-> symbol 0 (beta2), ops[1] <-> symbol 1 (beta1); static runs use ops[0].
    if (switching) {
        tau = switching->tau;
        table.tau = tau;
        table.seed = switching->sequence.seed();
        const std::size_t needed = switching->intervals_for(t_max);
        if (switching->sequence.size() < needed) {
            throw std::invalid_argument("control sequence has " + std::to_string(switching->sequence.size()) +
                                        " symbols but the run needs " + std::to_string(needed));
        }
        ops.emplace_back(build_h(model, switching->beta2));
        ops.emplace_back(build_h(model, switching->beta1));
    } else {
        ops.emplace_back(build_h(model, std::get<StaticProtocol>(protocol).beta));
    }

    const long start_site = options.initial_site.value_or(model.defect_site);
    SpectralPropagator prop(initial_state(model, start_site));

    auto record = [&](double t) {
        auto rec = prop.measure();
        rec.t = t;
        table.max_norm_drift = std::max(table.max_norm_drift, std::abs(prop.norm_squared() - 1.0));
        table.max_leak = std::max(table.max_leak, rec.leak);
        if (options.leak_limit >= 0.0 && rec.leak > options.leak_limit) {
            const std::size_t rule = required_sites(t_max, model.gamma);
            throw LatticeTooSmall(model.n_sites, std::max(rule, model.n_sites + 400), rec.leak, t);
        }
        table.samples.push_back(rec);
        if (options.observer) options.observer(prop.state());
    };

    record(0.0);
    const std::size_t intervals = switching ? switching->intervals_for(t_max) : 1;
    const double eps = 1e-9 * std::max(1.0, t_max);
    std::size_t interval = 0;
    std::size_t sample_index = 0;
    double t = 0.0;
    while (true) {
        // Consecutive intervals with the same symbol share one Hamiltonian and are
        // propagated as a single step.
        const std::size_t which = switching ? switching->sequence[interval] : 0;
        double next_switch = t_max;
        if (switching) {
            std::size_t run_end = interval + 1;
            while (run_end < intervals && switching->sequence[run_end] == which) ++run_end;
            if (run_end < intervals) next_switch = static_cast<double>(run_end) * tau;
        }
        const double next_sample = static_cast<double>(sample_index + 1) * sample_every;
        double target = std::min({next_switch, next_sample, t_max});
        const bool at_end = target >= t_max - eps;
        if (at_end) target = t_max;

        if (target - t > 1e-12) prop.advance(ops[which], target - t);
        t = target;
        if (at_end) {
            record(t_max);
            break;
        }
        if (std::abs(target - next_sample) <= eps) {
            record(next_sample);
            ++sample_index;
        }
        while (switching && interval + 1 < intervals && static_cast<double>(interval + 1) * tau <= t + eps) {
            ++interval;
        }
    }
    return table;
}

} // namespace ctqw
