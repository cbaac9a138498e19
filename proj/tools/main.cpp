// specseg command-line tool: simulate, fit, evaluate, experiment, replay.
//
// Every command resolves its configuration from defaults <- preset <- config
// file <- command-line flags, echoes the resolved configuration, runs, and
// writes plain tabular artifacts plus a manifest under --out. Re-running a
// command from its manifest reproduces all numeric artifacts bitwise.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "specseg/baselines.hpp"
#include "specseg/generators.hpp"
#include "specseg/io.hpp"
#include "specseg/metrics.hpp"
#include "specseg/rjmcmc.hpp"
#include "specseg/spectral.hpp"

namespace fs = std::filesystem;
using namespace specseg;

namespace {

constexpr const char* kVersion = "specseg 1.0.0";

// ---------------------------------------------------------------------------
// configuration plumbing

using Config = KeyValueConfig;

void set_default(Config& cfg, const std::string& key, const std::string& value) {
    cfg.emplace(key, value);
}

std::string get_str(const Config& cfg, const std::string& key, const std::string& dflt = "") {
    const auto it = cfg.find(key);
    return it == cfg.end() ? dflt : it->second;
}

long get_long(const Config& cfg, const std::string& key) {
    const auto it = cfg.find(key);
    require(it != cfg.end(), "config: missing key '" + key + "'");
    try {
        return std::stol(it->second);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: key '" + key + "' is not an integer: " + it->second);
    }
}

double get_double(const Config& cfg, const std::string& key) {
    const auto it = cfg.find(key);
    require(it != cfg.end(), "config: missing key '" + key + "'");
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: key '" + key + "' is not a number: " + it->second);
    }
}

bool get_bool(const Config& cfg, const std::string& key) {
    const std::string v = get_str(cfg, key, "0");
    return v == "1" || v == "true" || v == "yes";
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

// Preset defaults; explicit config keys always win because these use
// set_default (emplace) only.
void apply_preset(Config& cfg) {
    const std::string preset = get_str(cfg, "preset", "desk");
    require(preset == "desk" || preset == "paper", "config: preset must be desk or paper");
    cfg["preset"] = preset;
    if (preset == "desk") {
        set_default(cfg, "T", "1024");
        set_default(cfg, "n_replicates", "20");
        set_default(cfg, "n_iter", "6000");
        set_default(cfg, "n_burn", "2000");
    } else {
        set_default(cfg, "T", "5000");
        set_default(cfg, "n_replicates", "50");
        set_default(cfg, "n_iter", "10000");
        set_default(cfg, "n_burn", "4000");
    }
    set_default(cfg, "thin", "10");
    set_default(cfg, "t_min", "50");
    set_default(cfg, "max_segments", "30");
    set_default(cfg, "j_max", "30");
    set_default(cfg, "seed", "1");
    set_default(cfg, "workers", "1");
    set_default(cfg, "dgp", "garch");
    set_default(cfg, "estimators", "AD,G,R");
    set_default(cfg, "garch_mu", "0");
    set_default(cfg, "garch_alpha0", "1");
    set_default(cfg, "garch_alpha1", "0.1");
    set_default(cfg, "garch_beta1", "0.1");
    set_default(cfg, "price_col", "price");
    set_default(cfg, "date_col", "date");
    set_default(cfg, "squared", "0");
}

SamplerConfig sampler_from_config(const Config& cfg) {
    SamplerConfig s;
    s.n_iter = static_cast<int>(get_long(cfg, "n_iter"));
    s.n_burn = static_cast<int>(get_long(cfg, "n_burn"));
    s.thin = static_cast<int>(get_long(cfg, "thin"));
    s.j_max = static_cast<int>(get_long(cfg, "j_max"));
    s.rng_seed = static_cast<std::uint64_t>(get_long(cfg, "seed"));
    s.validate();
    return s;
}

PartitionConfig partition_from_config(const Config& cfg) {
    PartitionConfig p;
    p.t_min = static_cast<int>(get_long(cfg, "t_min"));
    p.max_segments = static_cast<int>(get_long(cfg, "max_segments"));
    p.validate();
    return p;
}

GarchParams garch_from_config(const Config& cfg) {
    GarchParams g;
    g.mu = get_double(cfg, "garch_mu");
    g.alpha0 = get_double(cfg, "garch_alpha0");
    g.alpha1 = get_double(cfg, "garch_alpha1");
    g.beta1 = get_double(cfg, "garch_beta1");
    g.validate();
    return g;
}

// ---------------------------------------------------------------------------
// artifacts

void write_resolved_config(const fs::path& out, const Config& cfg) {
    write_config((out / "config.txt").string(), cfg);
}

void write_manifest(const fs::path& out, const Config& cfg, double wall_time_s) {
    std::ofstream f(out / "manifest.txt");
    require(f.good(), "cannot write manifest");
    f << "# " << kVersion << '\n';
    f << "# wall_time_s " << fmt_double(wall_time_s) << '\n';
    f << "# replay with: specseg replay --config manifest.txt --out <dir>\n";
    for (const auto& [k, v] : cfg) f << k << '=' << v << '\n';
}

// Loads the input series for fit/evaluate: either a tabular series file or a
// CSV of prices converted to (squared) percent log-returns.
TimeSeries load_input_series(const Config& cfg) {
    const std::string series_file = get_str(cfg, "series_file");
    const std::string csv_file = get_str(cfg, "csv_file");
    require(series_file.empty() != csv_file.empty(),
            "config: exactly one of series_file or csv_file is required");
    if (!series_file.empty()) return read_series(series_file);

    const ReturnsSeries rs = ingest_csv(csv_file, get_str(cfg, "price_col", "price"),
                                        get_str(cfg, "date_col", "date"),
                                        static_cast<int>(get_long(cfg, "t_min")));
    for (const std::string& w : rs.warnings) std::cerr << "warning: " << w << '\n';
    if (rs.dropped_rows > 0)
        std::cerr << "warning: dropped " << rs.dropped_rows << " rows total\n";
    TimeSeries y;
    y.values = get_bool(cfg, "squared") ? rs.squared : rs.returns;
    y.origin_label = csv_file;
    return y;
}

PiecewiseSpectrum piecewise_from_config(const Config& cfg, int T) {
    const std::string file = get_str(cfg, "piecewise_file");
    return file.empty() ? default_piecewise_spectrum(T) : read_piecewise(file);
}

// ---------------------------------------------------------------------------
// commands

int cmd_simulate(Config cfg, const fs::path& out) {
    apply_preset(cfg);
    cfg["command"] = "simulate";
    const auto start = std::chrono::steady_clock::now();
    const int T = static_cast<int>(get_long(cfg, "T"));
    const auto seed = static_cast<std::uint64_t>(get_long(cfg, "seed"));
    const std::string dgp = get_str(cfg, "dgp", "garch");
    const std::vector<double> grid = make_freq_grid();

    Rng rng(seed);
    TimeSeries y;
    TvSpectrum truth;
    if (dgp == "garch") {
        const GarchParams g = garch_from_config(cfg);
        y = simulate_garch(g, T, rng);
        truth = garch_implied_tvspectrum(g, T, grid);
    } else if (dgp == "regime") {
        auto [ys, tr] = simulate_regime(default_regime_spec(T), rng, grid);
        y = std::move(ys);
        truth = std::move(tr);
    } else if (dgp == "piecewise") {
        const PiecewiseSpectrum ps = piecewise_from_config(cfg, T);
        y = synthesize_piecewise(ps, rng);
        truth = piecewise_truth(ps, grid);
        write_piecewise((out / "piecewise.txt").string(), ps);
    } else {
        throw std::invalid_argument("config: unknown dgp '" + dgp + "'");
    }

    write_resolved_config(out, cfg);
    write_series((out / "series.tsv").string(), y);
    write_spectrum_grid((out / "truth_grid.tsv").string(), truth);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(out, cfg, wall);
    return 0;
}

int cmd_fit(Config cfg, const fs::path& out) {
    apply_preset(cfg);
    cfg["command"] = "fit";
    const auto start = std::chrono::steady_clock::now();
    const TimeSeries y = load_input_series(cfg);

    const SamplerConfig scfg = sampler_from_config(cfg);
    const PartitionConfig pcfg = partition_from_config(cfg);
    Sampler sampler(y, scfg, pcfg);
    const PosteriorDraws draws = sampler.run();

    write_resolved_config(out, cfg);
    write_series((out / "series.tsv").string(), y);
    write_draws((out / "draws.txt").string(), draws);

    // posterior mean + central 90% band on the common grid
    const TvSpectrum mean = posterior_mean_spectrum(draws);
    const auto [lower, upper] = posterior_band(draws, scfg, 0.9);
    write_spectrum_grid((out / "spectrum_grid.tsv").string(), mean, &lower, &upper);

    TsvTable khist;
    khist.columns = {"K", "count"};
    for (std::size_t k = 1; k < draws.k_counts.size(); ++k)
        khist.rows.push_back({static_cast<double>(k), static_cast<double>(draws.k_counts[k])});
    write_tsv((out / "k_histogram.tsv").string(), khist);

    TsvTable cutpoints;
    cutpoints.columns = {"draw", "K", "cut_index", "position"};
    for (std::size_t i = 0; i < draws.partitions.size(); ++i) {
        const auto& cuts = draws.partitions[i];
        const auto K = static_cast<double>(cuts.size() - 1);
        for (std::size_t j = 1; j + 1 < cuts.size(); ++j)
            cutpoints.rows.push_back({static_cast<double>(i), K, static_cast<double>(j),
                                      static_cast<double>(cuts[j])});
    }
    write_tsv((out / "cutpoint_samples.tsv").string(), cutpoints);

    TsvTable traces;
    traces.columns = {"draw", "segment", "alpha0", "tau2"};
    for (std::size_t i = 0; i < draws.states.size(); ++i)
        for (std::size_t s = 0; s < draws.states[i].segments.size(); ++s)
            traces.rows.push_back({static_cast<double>(i), static_cast<double>(s),
                                   draws.states[i].segments[s].alpha0,
                                   draws.states[i].segments[s].tau2});
    write_tsv((out / "traces.tsv").string(), traces);

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(out, cfg, wall);
    return 0;
}

int cmd_evaluate(Config cfg, const fs::path& out) {
    apply_preset(cfg);
    cfg["command"] = "evaluate";
    const auto start = std::chrono::steady_clock::now();
    const TimeSeries y = load_input_series(cfg);
    const std::string truth_file = get_str(cfg, "truth_file");
    require(!truth_file.empty(), "config: evaluate requires truth_file (a spectrum grid)");
    const TvSpectrum truth = read_spectrum_grid(truth_file);
    require(truth.time_grid.size() == y.size(),
            "evaluate: truth grid length does not match the series");

    ExperimentConfig ecfg;
    ecfg.T = static_cast<int>(y.size());
    ecfg.sampler = sampler_from_config(cfg);
    ecfg.partition = partition_from_config(cfg);
    ecfg.freq_grid = truth.freq_grid;

    write_resolved_config(out, cfg);
    std::ofstream rf(out / "reports.csv");
    require(rf.good(), "cannot write reports.csv");
    write_report_header(rf);
    const auto seed = static_cast<std::uint64_t>(get_long(cfg, "seed"));
    int idx = 0;
    for (const std::string& est : split_list(get_str(cfg, "estimators", "AD,G,R"))) {
        MetricReport rep = evaluate_estimator(est, y, truth, ecfg, split_seed(seed, 1000));
        rep.dgp = "user";
        rep.replicate = idx++;
        write_report_row(rf, rep);
        rf.flush();
        if (!rep.error.empty()) std::cerr << "warning: estimator " << est << ": " << rep.error << '\n';
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(out, cfg, wall);
    return 0;
}

int cmd_experiment(Config cfg, const fs::path& out) {
    apply_preset(cfg);
    cfg["command"] = "experiment";
    const auto start = std::chrono::steady_clock::now();

    ExperimentConfig ecfg;
    const std::string dgp = get_str(cfg, "dgp", "garch");
    if (dgp == "garch") ecfg.dgp = Dgp::garch;
    else if (dgp == "regime") ecfg.dgp = Dgp::regime;
    else if (dgp == "piecewise") ecfg.dgp = Dgp::piecewise_spectrum;
    else throw std::invalid_argument("config: unknown dgp '" + dgp + "'");
    ecfg.T = static_cast<int>(get_long(cfg, "T"));
    ecfg.n_replicates = static_cast<int>(get_long(cfg, "n_replicates"));
    ecfg.estimators = split_list(get_str(cfg, "estimators", "AD,G,R"));
    ecfg.master_seed = static_cast<std::uint64_t>(get_long(cfg, "seed"));
    ecfg.sampler = sampler_from_config(cfg);
    ecfg.partition = partition_from_config(cfg);
    ecfg.garch = garch_from_config(cfg);
    if (ecfg.dgp == Dgp::piecewise_spectrum) ecfg.piecewise = piecewise_from_config(cfg, ecfg.T);

    write_resolved_config(out, cfg);
    std::ofstream rf(out / "reports.csv");
    require(rf.good(), "cannot write reports.csv");
    write_report_header(rf);
    // replicates run sequentially; the sink appends each record as soon as it
    // is computed so partial runs keep their finished rows
    run_experiment(ecfg, [&rf](const MetricReport& r) {
        write_report_row(rf, r);
        rf.flush();
    });
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(out, cfg, wall);
    return 0;
}

int dispatch(const std::string& command, Config cfg, const fs::path& out) {
    fs::create_directories(out);
    std::error_code ec;
    fs::remove(out / "error.txt", ec);  // clear stale failure records on re-runs
    if (command == "simulate") return cmd_simulate(std::move(cfg), out);
    if (command == "fit") return cmd_fit(std::move(cfg), out);
    if (command == "evaluate") return cmd_evaluate(std::move(cfg), out);
    if (command == "experiment") return cmd_experiment(std::move(cfg), out);
    throw std::invalid_argument("unknown command '" + command + "'");
}

struct CommonFlags {
    std::string config_file;
    std::string out;
    std::string preset;
    std::string price_col;
    std::string date_col;
    long seed = -1;
    int workers = 0;
    bool squared = false;
};

void add_common_flags(CLI::App* sub, CommonFlags& fl) {
    sub->add_option("--config", fl.config_file, "flat key=value configuration file");
    sub->add_option("--out", fl.out, "output directory")->required();
    sub->add_option("--seed", fl.seed, "master RNG seed (overrides config)");
    sub->add_option("--preset", fl.preset, "desk or paper")
        ->check(CLI::IsMember({"desk", "paper"}));
    sub->add_option("--workers", fl.workers, "worker count for replicates");
    sub->add_flag("--squared", fl.squared, "analyze squared returns from --config csv input");
    sub->add_option("--price-col", fl.price_col, "price column name for CSV ingestion");
    sub->add_option("--date-col", fl.date_col, "date column name for CSV ingestion");
}

Config merge_flags(const CommonFlags& fl) {
    Config cfg;
    if (!fl.config_file.empty()) cfg = read_config(fl.config_file);
    if (fl.seed >= 0) cfg["seed"] = std::to_string(fl.seed);
    if (!fl.preset.empty()) cfg["preset"] = fl.preset;
    if (fl.workers > 0) cfg["workers"] = std::to_string(fl.workers);
    if (fl.squared) cfg["squared"] = "1";
    if (!fl.price_col.empty()) cfg["price_col"] = fl.price_col;
    if (!fl.date_col.empty()) cfg["date_col"] = fl.date_col;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"time-varying spectral density estimation for non-stationary time series"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::map<std::string, CommonFlags> flags;
    for (const char* name : {"simulate", "fit", "evaluate", "experiment", "replay"}) {
        CLI::App* sub = app.add_subcommand(name);
        add_common_flags(sub, flags[name]);
    }
    app.get_subcommand("simulate")->description("generate a series and its ground-truth spectrum");
    app.get_subcommand("fit")->description("posterior spectrogram of a series or price CSV");
    app.get_subcommand("evaluate")->description("score estimators against a known truth grid");
    app.get_subcommand("experiment")->description("replicated simulate/estimate/score study");
    app.get_subcommand("replay")->description("re-run a command from its manifest");

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();
    const CommonFlags& fl = flags[command];

    try {
        if (command == "replay") {
            require(!fl.config_file.empty(), "replay: --config <manifest> is required");
            Config cfg = merge_flags(fl);
            const std::string replay_cmd = get_str(cfg, "command");
            require(!replay_cmd.empty(), "replay: manifest has no command key");
            cfg.erase("command");
            return dispatch(replay_cmd, std::move(cfg), fl.out);
        }
        return dispatch(command, merge_flags(fl), fl.out);
    } catch (const std::exception& e) {
        std::cerr << "error=" << e.what() << '\n';
        std::error_code ec;
        if (!fl.out.empty() && fs::exists(fl.out, ec)) {
            std::ofstream ef(fs::path(fl.out) / "error.txt");
            if (ef.good()) ef << "error=" << e.what() << '\n';
        }
        return 1;
    }
}
