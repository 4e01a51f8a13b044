#pragma once

#include "ctqw/config.hpp"
#include "ctqw/harness.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

namespace ctqw {

inline constexpr std::string_view code_version = "ctqw 1.0.0";

/// Shortest decimal that round-trips to the same double.
inline std::string format_number(double v)
{
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
    return {buf, end};
}

inline std::string seed_field(const std::optional<std::uint64_t>& seed, bool is_mean = false)
{
    if (is_mean) return "mean";
    return seed ? std::to_string(*seed) : "none";
}

// CSV schemas. Header row always present.

inline void write_series_csv(std::ostream& out, const std::vector<const SeriesTable*>& tables,
                             const std::vector<bool>& is_mean = {})
{
    out << "protocol,tau,seed,t,sigma,entropy,ipr,leak\n";
    for (std::size_t i = 0; i < tables.size(); ++i) {
        const auto& table = *tables[i];
        const bool mean = i < is_mean.size() && is_mean[i];
        const std::string prefix =
            table.protocol + "," + format_number(table.tau) + "," + seed_field(table.seed, mean) + ",";
        for (const auto& s : table.samples) {
            out << prefix << format_number(s.t) << ',' << format_number(s.sigma) << ',' << format_number(s.entropy)
                << ',' << format_number(s.ipr) << ',' << format_number(s.leak) << '\n';
        }
    }
}

inline void write_sweep_csv(std::ostream& out, const SweepResult& sweep)
{
    out << "protocol,tau,seed_or_mean,sigma_ratio\n";
    for (const auto& p : sweep.protocols) {
        const bool random = p.kind == SequenceKind::Random;
        for (const auto& point : p.curve) {
            out << to_tag(p.kind) << ',' << format_number(point.tau) << ',' << (random ? "mean" : "none") << ','
                << format_number(point.ratio) << '\n';
        }
    }
    for (const auto& p : sweep.protocols) {
        for (const auto& m : p.members) {
            out << to_tag(p.kind) << ',' << format_number(m.tau) << ',' << m.seed << ',' << format_number(m.ratio)
                << '\n';
        }
    }
}

inline void write_histogram_csv(std::ostream& out, const HistogramResult& hist)
{
    out << "seed,sigma_ratio\n";
    for (const auto& m : hist.members) out << m.seed << ',' << format_number(m.ratio) << '\n';
}

/// Deterministic-protocol reference lines for the histogram.
inline void write_histogram_reference_csv(std::ostream& out, const HistogramResult& hist)
{
    out << "protocol,tau,sigma_ratio\n";
    for (const auto& [kind, ref] : hist.references) {
        out << to_tag(kind) << ',' << format_number(ref.first) << ',' << format_number(ref.second) << '\n';
    }
    out << "rd_mean," << format_number(hist.tau) << ',' << format_number(hist.mean) << '\n';
}

/// Results of one CLI invocation; whichever parts are present get written.
struct RunResults {
    std::optional<Baselines> baselines;
    std::optional<SweepResult> sweep;
    std::optional<SeriesBundle> series;
    std::optional<HistogramResult> histogram;
    std::optional<ParrondoRun> parrondo;
    std::map<std::string, double> wall_seconds;
};

namespace detail {

    template <class Writer>
    void write_file(const std::filesystem::path& path, Writer&& writer)
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
        writer(out);
        out.flush();
        if (!out) throw std::runtime_error("failed writing " + path.string());
    }

    inline nlohmann::ordered_json sweep_summary(const SweepResult& s)
    {
        nlohmann::ordered_json j;
        j["t_max"] = s.t_max;
        j["lattice_sites"] = s.n_sites;
        j["sigma0"] = s.sigma0;
        j["max_leak"] = s.max_leak;
        for (const auto& p : s.protocols) {
            nlohmann::ordered_json e;
            e["tau_star"] = p.tau_star;
            e["max_ratio"] = p.max_ratio;
            if (p.window) e["window"] = {p.window->first, p.window->second};
            else e["window"] = nullptr;
            e["enhancement_contiguous"] = p.enhancement_contiguous;
            j["protocols"][std::string(to_tag(p.kind))] = e;
        }
        return j;
    }

} // namespace detail

/**
 * Writes CSV tables plus manifest.json into config.output_dir. CSV contents are
 * a pure function of the results; the manifest also records wall times.
 * Returns the written paths.
 */
inline std::vector<std::filesystem::path> emit_outputs(const RunResults& results, const ExperimentConfig& config)
{
    namespace fs = std::filesystem;
    const fs::path dir(config.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());

    std::vector<fs::path> written;
    nlohmann::ordered_json manifest;
    manifest["code_version"] = code_version;
    manifest["generator"] = random_generator_name;
    manifest["config"] = to_json(config);
    nlohmann::ordered_json runs;

    if (results.baselines) {
        const auto& b = *results.baselines;
        const auto path = dir / "baseline.csv";
        detail::write_file(path, [&](std::ostream& o) { write_series_csv(o, {&b.free, &b.beta1, &b.beta2}); });
        written.push_back(path);
        runs["baseline"] = {{"lattice_sites", b.free.n_sites},
                            {"sigma0", b.free.final().sigma},
                            {"sigma_beta1", b.beta1.final().sigma},
                            {"sigma_beta2", b.beta2.final().sigma}};
    }
    if (results.sweep) {
        const auto path = dir / "sweep.csv";
        detail::write_file(path, [&](std::ostream& o) { write_sweep_csv(o, *results.sweep); });
        written.push_back(path);
        runs["sweep"] = detail::sweep_summary(*results.sweep);
    }
    if (results.series) {
        const auto& s = *results.series;
        std::vector<const SeriesTable*> tables{&s.free};
        std::vector<bool> mean{false};
        for (const auto& t : s.tables) {
            tables.push_back(&t);
            mean.push_back(t.protocol == "rd");
        }
        const auto path = dir / "series.csv";
        detail::write_file(path, [&](std::ostream& o) { write_series_csv(o, tables, mean); });
        written.push_back(path);
        nlohmann::ordered_json j;
        j["t_max"] = s.t_max;
        j["lattice_sites"] = s.n_sites;
        j["max_leak"] = s.max_leak;
        j["max_norm_drift"] = s.max_norm_drift;
        for (const auto& t : s.tables) j["tau"][t.protocol] = t.tau;
        runs["series"] = j;
    }
    if (results.histogram) {
        const auto& h = *results.histogram;
        auto path = dir / "histogram.csv";
        detail::write_file(path, [&](std::ostream& o) { write_histogram_csv(o, h); });
        written.push_back(path);
        path = dir / "histogram_reference.csv";
        detail::write_file(path, [&](std::ostream& o) { write_histogram_reference_csv(o, h); });
        written.push_back(path);
        runs["histogram"] = {{"tau", h.tau},        {"t_max", h.t_max}, {"sigma0", h.sigma0},
                             {"edges", h.edges},    {"counts", h.counts}, {"mode", h.mode},
                             {"mean", h.mean},      {"max_leak", h.max_leak}};
    }
    if (results.parrondo) {
        const auto& p = *results.parrondo;
        const auto path = dir / "parrondo.csv";
        detail::write_file(path, [&](std::ostream& o) {
            write_series_csv(o, {&p.baselines.free, &p.baselines.beta1, &p.baselines.beta2, &p.switching});
        });
        written.push_back(path);
        runs["parrondo"] = {{"protocol", to_tag(p.kind)},
                            {"tau", p.tau},
                            {"seed", p.seed},
                            {"lattice_sites", p.switching.n_sites},
                            {"sigma0", p.verdict.sigma0},
                            {"sigma_beta1", p.verdict.sigma_b1},
                            {"sigma_beta2", p.verdict.sigma_b2},
                            {"sigma_switching", p.verdict.sigma_switch},
                            {"paradox", p.verdict.paradox}};
    }
    manifest["runs"] = runs;
    manifest["wall_seconds"] = results.wall_seconds;
    nlohmann::ordered_json files = nlohmann::ordered_json::array();
    for (const auto& p : written) files.push_back(p.filename().string());
    manifest["files"] = files;

    const auto manifest_path = dir / "manifest.json";
    detail::write_file(manifest_path, [&](std::ostream& o) { o << manifest.dump(2) << '\n'; });
    written.push_back(manifest_path);
    return written;
}

/**
 * Reads a sweep CSV and returns the argmax tau of each protocol's main curve
 * (rows whose seed_or_mean is "none" or "mean"; smallest tau on ties).
 */
inline std::map<SequenceKind, double> read_sweep_tau_star(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open sweep table " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("protocol,tau,seed_or_mean,sigma_ratio", 0) != 0) {
        throw std::runtime_error(path + ": missing sweep header 'protocol,tau,seed_or_mean,sigma_ratio'");
    }
    std::map<SequenceKind, std::pair<double, double>> best; // kind -> (tau, ratio)
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = detail::split_list(line);
        if (fields.size() != 4) throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected 4 columns");
        if (fields[2] != "none" && fields[2] != "mean") continue;
        const auto kind = kind_from_tag(fields[0]);
        const double tau = detail::parse_double("tau", fields[1]);
        const double ratio = detail::parse_double("sigma_ratio", fields[3]);
        auto it = best.find(kind);
        if (it == best.end() || ratio > it->second.second ||
            (ratio == it->second.second && tau < it->second.first)) {
            best[kind] = {tau, ratio};
        }
    }
    std::map<SequenceKind, double> out;
    for (const auto& [kind, v] : best) out[kind] = v.first;
    return out;
}

} // namespace ctqw
