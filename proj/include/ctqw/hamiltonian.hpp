#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ctqw {

/**
 * Open 1D chain with one transition defect.
 *
 * Sites are labelled j = -(N-1)/2 ... (N-1)/2; label 0 sits at array index (N-1)/2.
 * Energies are in units of gamma.
 */
struct LatticeModel {
    std::size_t n_sites = 0;
    double epsilon = 0.0;
    double gamma = 1.0;
    long defect_site = 0;
    double beta1 = -2.5;
    double beta2 = -3.0;

    long half_width() const { return static_cast<long>((n_sites - 1) / 2); }
    std::size_t index_of(long label) const { return static_cast<std::size_t>(label + half_width()); }
    long label_of(std::size_t index) const { return static_cast<long>(index) - half_width(); }
    bool contains(long label) const { return label >= -half_width() && label <= half_width(); }

    void validate() const
    {
        if (n_sites < 3 || n_sites % 2 == 0) {
            throw std::invalid_argument("lattice needs an odd number of sites >= 3, got " + std::to_string(n_sites));
        }
        if (!(gamma > 0.0) || !std::isfinite(gamma)) {
            throw std::invalid_argument("hopping rate gamma must be positive");
        }
        if (!std::isfinite(epsilon) || !std::isfinite(beta1) || !std::isfinite(beta2)) {
            throw std::invalid_argument("lattice energies must be finite");
        }
        if (std::abs(defect_site) > half_width() - 1) {
            throw std::invalid_argument("defect site " + std::to_string(defect_site) +
                                        " leaves a defect bond outside the lattice");
        }
    }
};

/// Default lattice size for a run to t_max: wavefront at 2*gamma*t plus a 200-site buffer per side.
inline std::size_t required_sites(double t_max, double gamma = 1.0)
{
    if (!(t_max >= 0.0)) {
        throw std::invalid_argument("t_max must be non-negative");
    }
    return 2 * (static_cast<std::size_t>(std::ceil(2.0 * gamma * t_max)) + 200) + 1;
}

/**
 * Real symmetric tridiagonal matrix. off_diagonal[i] couples sites i and i+1.
 */
class TridiagonalOperator {
public:
    TridiagonalOperator(std::vector<double> diagonal, std::vector<double> off_diagonal)
        : diagonal_(std::move(diagonal))
        , off_diagonal_(std::move(off_diagonal))
    {
        if (diagonal_.empty()) {
            throw std::invalid_argument("tridiagonal operator needs at least one site");
        }
        if (off_diagonal_.size() + 1 != diagonal_.size()) {
            throw std::invalid_argument("off-diagonal must have exactly N-1 entries");
        }
        double max_diag = 0.0, max_off = 0.0;
        for (double d : diagonal_) max_diag = std::max(max_diag, std::abs(d));
        for (double o : off_diagonal_) max_off = std::max(max_off, std::abs(o));
        norm_bound_ = max_diag + 2.0 * max_off;
    }

    std::size_t size() const { return diagonal_.size(); }
    std::span<const double> diagonal() const { return diagonal_; }
    std::span<const double> off_diagonal() const { return off_diagonal_; }
    /// Gershgorin bound on the spectral radius: max|diag| + 2 max|offdiag|.
    double norm_bound() const { return norm_bound_; }

    double entry(std::size_t row, std::size_t col) const
    {
        if (row == col) return diagonal_[row];
        if (row + 1 == col) return off_diagonal_[row];
        if (col + 1 == row) return off_diagonal_[col];
        return 0.0;
    }

    template <class T>
    std::vector<T> apply(std::span<const T> x) const
    {
        if (x.size() != size()) {
            throw std::invalid_argument("vector length does not match operator size");
        }
        const std::size_t n = size();
        std::vector<T> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            T acc = diagonal_[i] * x[i];
            if (i > 0) acc += off_diagonal_[i - 1] * x[i - 1];
            if (i + 1 < n) acc += off_diagonal_[i] * x[i + 1];
            y[i] = acc;
        }
        return y;
    }

    friend bool operator==(const TridiagonalOperator&, const TridiagonalOperator&) = default;

private:
    std::vector<double> diagonal_;
    std::vector<double> off_diagonal_;
    double norm_bound_ = 0.0;
};

/// Defect-free chain: diagonal epsilon, couplings -gamma.
inline TridiagonalOperator build_h0(const LatticeModel& model)
{
    model.validate();
    return {std::vector<double>(model.n_sites, model.epsilon), std::vector<double>(model.n_sites - 1, -model.gamma)};
}

/**
 * H0 + beta * Hd. Hd has -1 on both bonds touching the defect site, so those
 * couplings become -gamma - beta (with beta = -2.5 that is +1.5 gamma).
 */
inline TridiagonalOperator build_h(const LatticeModel& model, double beta)
{
    model.validate();
    if (!std::isfinite(beta)) {
        throw std::invalid_argument("defect intensity must be finite");
    }
    std::vector<double> off(model.n_sites - 1, -model.gamma);
    const std::size_t d = model.index_of(model.defect_site);
    off[d - 1] = -model.gamma - beta;
    off[d] = -model.gamma - beta;
    return {std::vector<double>(model.n_sites, model.epsilon), std::move(off)};
}

} // namespace ctqw
