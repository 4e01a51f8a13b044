// Command-line front end: sequence generation, experiment runs and Hamiltonian dumps.

#include "ctqw/ctqw.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

using namespace ctqw;

namespace {

struct GlobalOptions {
    std::string config_path;
    std::string out_dir;
    std::string preset;
    std::optional<std::size_t> threads;
    bool dump_hamiltonian = false;
    bool quiet = false;
};

ExperimentConfig build_config(const GlobalOptions& g)
{
    ExperimentConfig config;
    if (!g.preset.empty()) apply_preset(config, g.preset);
    if (!g.config_path.empty()) load_config_file(config, g.config_path);
    if (!g.out_dir.empty()) config.output_dir = g.out_dir;
    if (g.threads) config.threads = *g.threads;
    config.validate();
    return config;
}

ProgressFn progress_sink(const GlobalOptions& g)
{
    if (g.quiet) return {};
    return [](const std::string& msg) { std::cerr << msg << '\n'; };
}

template <class F>
auto timed(RunResults& results, const std::string& name, F&& f)
{
    const auto start = std::chrono::steady_clock::now();
    auto value = f();
    results.wall_seconds[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return value;
}

void print_written(const std::vector<std::filesystem::path>& paths)
{
    for (const auto& p : paths) std::cerr << "wrote " << p.string() << '\n';
}

/// (row, col, value) triplets of the nonzero entries.
void dump_operator(std::ostream& out, const std::string& label, const TridiagonalOperator& h)
{
    for (std::size_t r = 0; r < h.size(); ++r) {
        for (std::size_t c = (r > 0 ? r - 1 : 0); c <= std::min(r + 1, h.size() - 1); ++c) {
            const double v = h.entry(r, c);
            if (v != 0.0) out << label << ',' << r << ',' << c << ',' << format_number(v) << '\n';
        }
    }
}

std::map<SequenceKind, double> parse_tau_list(const std::vector<std::string>& items)
{
    std::map<SequenceKind, double> out;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("expected kind=tau, got '" + item + "'");
        out[kind_from_tag(item.substr(0, eq))] = detail::parse_double("tau", item.substr(eq + 1));
    }
    return out;
}

/// tau* per protocol from --taus, a sweep CSV, or a fresh sweep at config.t_max.
std::map<SequenceKind, double> resolve_tau_star(const ExperimentConfig& config, const std::vector<std::string>& taus,
                                                const std::string& sweep_csv, RunResults& results,
                                                const ProgressFn& progress)
{
    std::map<SequenceKind, double> out;
    if (!sweep_csv.empty()) out = read_sweep_tau_star(sweep_csv);
    for (const auto& [k, v] : parse_tau_list(taus)) out[k] = v;
    bool missing = false;
    for (auto k : config.protocols) missing = missing || !out.contains(k);
    if (missing) {
        auto sweep = timed(results, "sweep", [&] { return run_tau_sweep(config, progress); });
        for (const auto& p : sweep.protocols) {
            if (!out.contains(p.kind)) out[p.kind] = p.tau_star;
        }
        results.sweep = std::move(sweep);
    }
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Continuous-time quantum walk with a switched transition defect"};
    app.require_subcommand(0, 1);

    GlobalOptions g;
    app.add_option("--config", g.config_path, "Flat key = value config file")->check(CLI::ExistingFile);
    app.add_option("--out", g.out_dir, "Output directory (overrides config output_dir)");
    app.add_option("--threads", g.threads, "Worker threads (0 = all cores)");
    app.add_option("--preset", g.preset, "Parameter profile")->check(CLI::IsMember({"desk", "paper"}));
    app.add_flag("--dump-hamiltonian", g.dump_hamiltonian,
                 "Print (operator,row,col,value) triplets of H for beta = 0, beta1, beta2 and exit (N <= 64)");
    app.add_flag("--quiet", g.quiet, "Suppress progress messages");

    // seq
    auto* seq_cmd = app.add_subcommand("seq", "Generate a control sequence or its metrics");
    std::string seq_kind = "fb";
    std::size_t seq_length = 64;
    std::uint64_t seq_seed = 1;
    unsigned start_symbol = 1;
    bool seq_metrics = false;
    std::size_t max_lag = 10, max_order = 10, seq_ensemble = 50;
    seq_cmd->add_option("--kind", seq_kind, "pe, fb, tm, rs or rd")->check(CLI::IsMember({"pe", "fb", "tm", "rs", "rd"}));
    seq_cmd->add_option("--length", seq_length, "Number of symbols")->check(CLI::PositiveNumber);
    seq_cmd->add_option("--seed", seq_seed, "Seed (rd; first seed of the ensemble with --metrics)");
    seq_cmd->add_option("--start-symbol", start_symbol, "First symbol of the periodic word")->check(CLI::Range(0, 1));
    seq_cmd->add_flag("--metrics", seq_metrics, "Emit AC(k), BP(m), RP(m) as CSV instead of the word");
    seq_cmd->add_option("--max-lag", max_lag, "Largest autocorrelation lag K");
    seq_cmd->add_option("--max-order", max_order, "Largest persistence order M");
    seq_cmd->add_option("--ensemble", seq_ensemble, "Seeds averaged for rd metrics")->check(CLI::PositiveNumber);

    auto* baseline_cmd = app.add_subcommand("baseline", "Static runs at beta = 0, beta1, beta2");

    auto* sweep_cmd = app.add_subcommand("sweep", "sigma/sigma0 over the tau grid for each protocol");

    auto* series_cmd = app.add_subcommand("series", "Long time series of sigma, S and IPR at tau*");
    std::vector<std::string> series_taus;
    std::string series_sweep;
    series_cmd->add_option("--taus", series_taus, "kind=tau pairs, e.g. pe=1.23 fb=0.94")->delimiter(',');
    series_cmd->add_option("--sweep-csv", series_sweep, "Take tau* from an existing sweep table")
        ->check(CLI::ExistingFile);

    auto* hist_cmd = app.add_subcommand("histogram", "Random-ensemble sigma/sigma0 histogram at the random tau*");
    std::vector<std::string> hist_taus;
    std::string hist_sweep;
    hist_cmd->add_option("--taus", hist_taus, "kind=tau pairs; rd sets the histogram interval")->delimiter(',');
    hist_cmd->add_option("--sweep-csv", hist_sweep, "Take tau* from an existing sweep table")->check(CLI::ExistingFile);

    auto* parrondo_cmd = app.add_subcommand("parrondo", "Baselines plus one switching run, with the verdict");
    std::string parrondo_kind = "pe";
    std::optional<double> parrondo_tau;
    std::uint64_t parrondo_seed = 1;
    parrondo_cmd->add_option("--kind", parrondo_kind, "Switching protocol")
        ->check(CLI::IsMember({"pe", "fb", "tm", "rs", "rd"}));
    parrondo_cmd->add_option("--tau", parrondo_tau, "Switching interval (default: config tau)");
    parrondo_cmd->add_option("--seed", parrondo_seed, "Seed for rd");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*seq_cmd) {
            const auto kind = kind_from_tag(seq_kind);
            if (!seq_metrics) {
                std::cout << generate(kind, seq_length, seq_seed, static_cast<std::uint8_t>(start_symbol)).to_string()
                          << '\n';
                return 0;
            }
            const bool random = kind == SequenceKind::Random;
            const auto metrics = random ? random_ensemble_metrics(seq_seed, seq_ensemble, seq_length, max_lag, max_order)
                                        : compute_metrics(generate(kind, seq_length, seq_seed,
                                                                   static_cast<std::uint8_t>(start_symbol)),
                                                          max_lag, max_order);
            const std::string seed_col = random ? "mean" : "none";
            std::cout << "kind,seed,k_or_m,metric,value\n";
            for (const auto& [k, v] : metrics.ac) {
                std::cout << seq_kind << ',' << seed_col << ',' << k << ",AC," << format_number(v) << '\n';
            }
            for (const auto& [m, v] : metrics.bp) {
                std::cout << seq_kind << ',' << seed_col << ',' << m << ",BP," << format_number(v) << '\n';
            }
            for (const auto& [m, v] : metrics.rp) {
                std::cout << seq_kind << ',' << seed_col << ',' << m << ",RP," << format_number(v) << '\n';
            }
            return 0;
        }

        auto config = build_config(g);
        const auto progress = progress_sink(g);

        if (g.dump_hamiltonian) {
            const auto model = config.model_for(config.t_max);
            if (model.n_sites > 64) {
                std::cerr << "--dump-hamiltonian needs lattice_sites <= 64 (got " << model.n_sites
                          << "); set lattice_sites in the config\n";
                return 2;
            }
            std::cout << "operator,row,col,value\n";
            dump_operator(std::cout, "h0", build_h0(model));
            dump_operator(std::cout, "beta1", build_h(model, model.beta1));
            dump_operator(std::cout, "beta2", build_h(model, model.beta2));
            return 0;
        }

        RunResults results;
        if (*baseline_cmd) {
            results.baselines = timed(results, "baseline", [&] { return run_baselines(config); });
            const auto& b = *results.baselines;
            std::printf("t=%g N=%zu sigma0=%.10g sigma_beta1=%.10g sigma_beta2=%.10g\n", config.t_max, b.free.n_sites,
                        b.free.final().sigma, b.beta1.final().sigma, b.beta2.final().sigma);
        } else if (*sweep_cmd) {
            results.sweep = timed(results, "sweep", [&] { return run_tau_sweep(config, progress); });
            for (const auto& p : results.sweep->protocols) {
                std::printf("%s tau*=%.6g max_ratio=%.6f window=", std::string(to_tag(p.kind)).c_str(), p.tau_star,
                            p.max_ratio);
                if (p.window) std::printf("[%.6g, %.6g]\n", p.window->first, p.window->second);
                else std::printf("none\n");
            }
        } else if (*series_cmd) {
            const auto taus = resolve_tau_star(config, series_taus, series_sweep, results, progress);
            results.series = timed(results, "series", [&] { return run_time_series(config, taus, progress); });
            for (const auto& t : results.series->tables) {
                const auto& f = t.final();
                std::printf("%s tau=%.6g t=%g sigma=%.8g S=%.8g IPR=%.8g\n", t.protocol.c_str(), t.tau, f.t, f.sigma,
                            f.entropy, f.ipr);
            }
        } else if (*hist_cmd) {
            auto taus = resolve_tau_star(config, hist_taus, hist_sweep, results, progress);
            if (!taus.contains(SequenceKind::Random)) {
                throw std::invalid_argument("histogram needs a tau for rd (include rd in protocols or pass --taus)");
            }
            results.histogram = timed(results, "histogram", [&] {
                return run_random_histogram(config, taus.at(SequenceKind::Random), taus, {}, progress);
            });
            const auto& h = *results.histogram;
            std::size_t above = 0;
            for (const auto& m : h.members) above += m.ratio > 1.0;
            std::printf("tau=%.6g t=%g members=%zu above_one=%zu mean=%.6f mode=%.6f\n", h.tau, h.t_max,
                        h.members.size(), above, h.mean, h.mode);
            for (const auto& [kind, ref] : h.references) {
                std::printf("reference %s tau=%.6g ratio=%.6f\n", std::string(to_tag(kind)).c_str(), ref.first,
                            ref.second);
            }
        } else if (*parrondo_cmd) {
            if (parrondo_tau) config.tau = *parrondo_tau;
            config.validate();
            results.parrondo =
                timed(results, "parrondo", [&] { return run_parrondo(config, kind_from_tag(parrondo_kind), parrondo_seed); });
            const auto& v = results.parrondo->verdict;
            std::printf("protocol=%s tau=%g t=%g sigma0=%.8g sigma_beta1=%.8g sigma_beta2=%.8g sigma_switching=%.8g "
                        "paradox=%s\n",
                        parrondo_kind.c_str(), config.tau, config.t_max, v.sigma0, v.sigma_b1, v.sigma_b2,
                        v.sigma_switch, v.paradox ? "true" : "false");
        } else {
            std::cerr << app.help();
            return 1;
        }
        print_written(emit_outputs(results, config));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
