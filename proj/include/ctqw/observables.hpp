#pragma once

#include "ctqw/errors.hpp"

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctqw {

/// One sample of the wavepacket diagnostics.
struct ObservableRecord {
    double t = 0.0;
    double sigma = 0.0;
    double entropy = 0.0; ///< base-10 Shannon entropy
    double ipr = 1.0;
    double leak = 0.0; ///< probability on the outermost edge sites
};

inline std::vector<double> probabilities(std::span<const std::complex<double>> amplitudes)
{
    std::vector<double> p(amplitudes.size());
    for (std::size_t j = 0; j < amplitudes.size(); ++j) p[j] = std::norm(amplitudes[j]);
    return p;
}

/// Signed labels -(N-1)/2 ... (N-1)/2 for an odd-sized lattice.
inline std::vector<double> centered_labels(std::size_t n)
{
    std::vector<double> labels(n);
    const double half = static_cast<double>(n - 1) / 2.0;
    for (std::size_t j = 0; j < n; ++j) labels[j] = static_cast<double>(j) - half;
    return labels;
}

/**
 * Standard deviation of the position distribution over the given labels.
 * A radicand within -1e-12 of zero is clamped to 0; anything more negative throws.
 */
inline double sigma(std::span<const double> p, std::span<const double> labels)
{
    if (p.size() != labels.size()) {
        throw std::invalid_argument("probability and label arrays differ in length");
    }
    double first = 0.0, second = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        first += labels[j] * p[j];
        second += labels[j] * labels[j] * p[j];
    }
    const double variance = second - first * first;
    if (variance < 0.0) {
        if (variance < -1e-12) {
            throw NumericalInconsistency("negative position variance " + std::to_string(variance));
        }
        return 0.0;
    }
    return std::sqrt(variance);
}

/// -sum p log10 p. Terms below 1e-300 count as zero.
inline double shannon(std::span<const double> p)
{
    double s = 0.0;
    for (double pj : p) {
        if (pj >= 1e-300) s -= pj * std::log10(pj);
    }
    return s;
}

inline double ipr(std::span<const double> p)
{
    double sum_sq = 0.0;
    for (double pj : p) sum_sq += pj * pj;
    if (sum_sq <= 0.0) {
        throw std::invalid_argument("inverse participation ratio of an all-zero distribution");
    }
    return 1.0 / sum_sq;
}

/// Total probability on the `edge` outermost sites at each end.
inline double boundary_leak(std::span<const double> p, std::size_t edge = 10)
{
    double leak = 0.0;
    const std::size_t n = p.size();
    if (2 * edge >= n) {
        for (double pj : p) leak += pj;
        return leak;
    }
    for (std::size_t j = 0; j < edge; ++j) leak += p[j] + p[n - 1 - j];
    return leak;
}

inline ObservableRecord measure(std::span<const std::complex<double>> amplitudes, double t)
{
    const auto p = probabilities(amplitudes);
    const auto labels = centered_labels(p.size());
    return {t, sigma(p, labels), shannon(p), ipr(p), boundary_leak(p)};
}

} // namespace ctqw
