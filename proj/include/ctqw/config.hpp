#pragma once

#include "ctqw/hamiltonian.hpp"
#include "ctqw/sequence.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctqw {

/// 60 geometrically spaced switching intervals covering [0.5, 100].
inline std::vector<double> default_tau_grid(double lo = 0.5, double hi = 100.0, std::size_t points = 60)
{
    if (!(lo > 0.0) || !(hi > lo) || points < 2) {
        throw std::invalid_argument("tau grid needs 0 < lo < hi and at least two points");
    }
    std::vector<double> grid(points);
    const double ratio = hi / lo;
    for (std::size_t i = 0; i < points; ++i) {
        grid[i] = lo * std::pow(ratio, static_cast<double>(i) / static_cast<double>(points - 1));
    }
    grid.front() = lo;
    grid.back() = hi;
    return grid;
}

inline std::vector<SequenceKind> all_protocols()
{
    return {SequenceKind::Periodic, SequenceKind::Fibonacci, SequenceKind::ThueMorse, SequenceKind::RudinShapiro,
            SequenceKind::Random};
}

/**
 * Everything an experiment depends on. Defaults are the desk-scale profile with
 * the standard defect parameters (beta1 = -2.5, beta2 = -3, defect at 0).
 */
struct ExperimentConfig {
    double gamma = 1.0;
    double epsilon = 0.0;
    double beta1 = -2.5;
    double beta2 = -3.0;
    long defect_site = 0;
    std::optional<long> initial_site; ///< defaults to the defect site

    double t_max = 500.0;    ///< baselines, sweeps and single switching runs
    double t_series = 1000.0; ///< long time series and the random histogram
    std::vector<double> tau_grid = default_tau_grid();
    double tau = 1.25; ///< switching interval for the single `parrondo` run
    std::vector<SequenceKind> protocols = all_protocols();
    std::uint8_t periodic_start = 1;

    std::size_t random_ensemble_size = 50;
    std::size_t histogram_ensemble_size = 100;
    std::size_t histogram_bins = 20;
    std::uint64_t base_seed = 1;

    std::size_t lattice_sites = 0; ///< 0 = size from the run length
    double sample_every = 0.0;     ///< 0 = sample at switch times (every tau)
    std::string output_dir = "out";
    std::size_t threads = 0; ///< 0 = hardware concurrency

    void validate() const
    {
        if (!(t_max > 0.0) || !(t_series > 0.0)) throw std::invalid_argument("t_max and t_series must be positive");
        if (tau_grid.empty()) throw std::invalid_argument("tau_grid must not be empty");
        for (std::size_t i = 0; i < tau_grid.size(); ++i) {
            if (!(tau_grid[i] > 0.0)) throw std::invalid_argument("tau_grid values must be positive");
            if (i > 0 && !(tau_grid[i] > tau_grid[i - 1])) {
                throw std::invalid_argument("tau_grid must be strictly increasing");
            }
        }
        if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
        if (protocols.empty()) throw std::invalid_argument("at least one protocol is required");
        if (random_ensemble_size == 0 || histogram_ensemble_size == 0) {
            throw std::invalid_argument("ensemble sizes must be positive");
        }
        if (histogram_bins == 0) throw std::invalid_argument("histogram_bins must be positive");
        if (sample_every < 0.0) throw std::invalid_argument("sample_every must be non-negative");
        if (periodic_start > 1) throw std::invalid_argument("periodic_start must be 0 or 1");
        if (lattice_sites != 0) model_for(t_max).validate();
    }

    /// Lattice for a run to `horizon`: explicit size if configured, else the sizing rule.
    LatticeModel model_for(double horizon) const
    {
        LatticeModel m;
        m.n_sites = lattice_sites != 0 ? lattice_sites : required_sites(horizon, gamma);
        m.epsilon = epsilon;
        m.gamma = gamma;
        m.defect_site = defect_site;
        m.beta1 = beta1;
        m.beta2 = beta2;
        return m;
    }

    bool uses(SequenceKind kind) const
    {
        for (auto k : protocols) {
            if (k == kind) return true;
        }
        return false;
    }
};

/// Named profiles: "desk" (t_max 500, series 1000) and "paper" (2000 / 4000).
inline void apply_preset(ExperimentConfig& config, const std::string& name)
{
    if (name == "desk") {
        config.t_max = 500.0;
        config.t_series = 1000.0;
    } else if (name == "paper") {
        config.t_max = 2000.0;
        config.t_series = 4000.0;
    } else {
        throw std::invalid_argument("unknown preset '" + name + "' (expected desk or paper)");
    }
}

namespace detail {

    inline std::string trim(const std::string& s)
    {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return {};
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    inline std::vector<std::string> split_list(const std::string& s)
    {
        std::vector<std::string> out;
        std::stringstream in(s);
        std::string item;
        while (std::getline(in, item, ',')) {
            item = trim(item);
            if (!item.empty()) out.push_back(item);
        }
        return out;
    }

    inline double parse_double(const std::string& key, const std::string& value)
    {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(value, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != value.size() || value.empty()) {
            throw std::invalid_argument("config key '" + key + "': '" + value + "' is not a number");
        }
        return v;
    }

    inline long long parse_integer(const std::string& key, const std::string& value)
    {
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(value, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != value.size() || value.empty()) {
            throw std::invalid_argument("config key '" + key + "': '" + value + "' is not an integer");
        }
        return v;
    }

    inline std::size_t parse_count(const std::string& key, const std::string& value)
    {
        const auto v = parse_integer(key, value);
        if (v < 0) throw std::invalid_argument("config key '" + key + "' must be non-negative");
        return static_cast<std::size_t>(v);
    }

} // namespace detail

/// Applies one `key = value` setting. Unknown keys are an error.
inline void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& raw)
{
    using namespace detail;
    const std::string value = trim(raw);
    if (key == "gamma") c.gamma = parse_double(key, value);
    else if (key == "epsilon") c.epsilon = parse_double(key, value);
    else if (key == "beta1") c.beta1 = parse_double(key, value);
    else if (key == "beta2") c.beta2 = parse_double(key, value);
    else if (key == "defect_site") c.defect_site = static_cast<long>(parse_integer(key, value));
    else if (key == "initial_site") c.initial_site = static_cast<long>(parse_integer(key, value));
    else if (key == "t_max") c.t_max = parse_double(key, value);
    else if (key == "t_series") c.t_series = parse_double(key, value);
    else if (key == "tau") c.tau = parse_double(key, value);
    else if (key == "tau_grid") {
        c.tau_grid.clear();
        for (const auto& item : split_list(value)) c.tau_grid.push_back(parse_double(key, item));
    } else if (key == "tau_geometric") {
        // lo, hi, points
        const auto parts = split_list(value);
        if (parts.size() != 3) throw std::invalid_argument("tau_geometric expects 'lo, hi, points'");
        c.tau_grid = default_tau_grid(parse_double(key, parts[0]), parse_double(key, parts[1]),
                                      parse_count(key, parts[2]));
    } else if (key == "protocols") {
        c.protocols.clear();
        for (const auto& item : split_list(value)) c.protocols.push_back(kind_from_tag(item));
    } else if (key == "periodic_start") c.periodic_start = static_cast<std::uint8_t>(parse_count(key, value));
    else if (key == "random_ensemble_size") c.random_ensemble_size = parse_count(key, value);
    else if (key == "histogram_ensemble_size") c.histogram_ensemble_size = parse_count(key, value);
    else if (key == "histogram_bins") c.histogram_bins = parse_count(key, value);
    else if (key == "base_seed") c.base_seed = static_cast<std::uint64_t>(parse_count(key, value));
    else if (key == "lattice_sites") c.lattice_sites = parse_count(key, value);
    else if (key == "sample_every") c.sample_every = parse_double(key, value);
    else if (key == "output_dir") c.output_dir = value;
    else if (key == "threads") c.threads = parse_count(key, value);
    else if (key == "preset") apply_preset(c, value);
    else throw std::invalid_argument("unknown config key '" + key + "'");
}

/// Flat `key = value` text; '#' starts a comment. Keys are applied in file order.
inline void load_config(ExperimentConfig& config, std::istream& in)
{
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
        }
        try {
            set_config_value(config, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

inline void load_config_file(ExperimentConfig& config, const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    load_config(config, in);
}

inline nlohmann::ordered_json to_json(const ExperimentConfig& c)
{
    nlohmann::ordered_json j;
    j["gamma"] = c.gamma;
    j["epsilon"] = c.epsilon;
    j["beta1"] = c.beta1;
    j["beta2"] = c.beta2;
    j["defect_site"] = c.defect_site;
    j["initial_site"] = c.initial_site.value_or(c.defect_site);
    j["t_max"] = c.t_max;
    j["t_series"] = c.t_series;
    j["tau_grid"] = c.tau_grid;
    j["tau"] = c.tau;
    std::vector<std::string> tags;
    for (auto k : c.protocols) tags.emplace_back(to_tag(k));
    j["protocols"] = tags;
    j["periodic_start"] = c.periodic_start;
    j["random_ensemble_size"] = c.random_ensemble_size;
    j["histogram_ensemble_size"] = c.histogram_ensemble_size;
    j["histogram_bins"] = c.histogram_bins;
    j["base_seed"] = c.base_seed;
    j["lattice_sites"] = c.lattice_sites;
    j["sample_every"] = c.sample_every;
    j["output_dir"] = c.output_dir;
    j["threads"] = c.threads;
    return j;
}

} // namespace ctqw
