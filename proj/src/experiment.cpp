#include "darwinize/experiment.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>

#include "darwinize/csv.hpp"
#include "darwinize/errors.hpp"
#include "darwinize/measurement.hpp"
#include "darwinize/parallel.hpp"

#ifndef DARWINIZE_VERSION
#define DARWINIZE_VERSION "unknown"
#endif

namespace darwinize {

namespace {

constexpr std::pair<Command, std::string_view> command_names[] = {
    {Command::dynamics, "dynamics"},
    {Command::partial_info, "partial-info"},
    {Command::correlations, "correlations"},
    {Command::redundancy_series, "redundancy-series"},
    {Command::nonmarkov, "nonmarkov"},
};

struct Setup {
    RunConfig config;
    PseudomodeEnsemble ensemble;
    Trajectory traj;
};

Setup make_setup(const RunConfig& c) {
    Setup s;
    s.config = c;
    s.ensemble = build_ensemble(c.params, c.n_modes, c.scheme, c.cutoff);
    s.traj = build_trajectory(c.params, s.ensemble, TimeGrid(c.t_max, c.n_steps));
    return s;
}

PartialInfoOptions sampling(const RunConfig& c, int threads, bool with_split) {
    PartialInfoOptions o;
    o.n_samples = c.n_samples;
    o.seed = c.seed;
    o.with_split = with_split;
    o.exhaustive_limit = c.exhaustive_limit;
    o.threads = threads;
    return o;
}

SeriesOptions series_options(const RunConfig& c, int threads) {
    SeriesOptions o;
    o.n_points = c.n_series;
    o.delta = c.params.deficit;
    o.max_gamma_ratio_ii = c.max_gamma_ratio_ii;
    o.witness = c.witness;
    o.sampling = sampling(c, threads, false);
    return o;
}

RedundancyResult safe_redundancy(const PartialInfoCurve& curve, double delta) {
    try {
        return redundancy(curve, delta);
    } catch (const UndefinedRedundancy&) {
        RedundancyResult r;
        r.t = curve.t;
        r.delta = delta;
        return r;
    }
}

class Outputs {
public:
    explicit Outputs(std::filesystem::path dir) : dir_(std::move(dir)) {}

    CsvWriter open(const std::string& name, std::initializer_list<std::string_view> header) {
        return CsvWriter(dir_ / name, header);
    }
    void done(const std::string& name, CsvWriter& w) {
        w.close();
        files_.push_back({name, w.rows()});
    }
    [[nodiscard]] const std::vector<OutputFile>& files() const { return files_; }

private:
    std::filesystem::path dir_;
    std::vector<OutputFile> files_;
};

void write_dynamics(const Setup& s, Outputs& out) {
    const Trajectory& tr = s.traj;
    const Eigen::VectorXd pur = purity(tr, s.config.params);
    auto w = out.open("dynamics.csv", {"t", "re_ce", "im_ce", "abs_ce2", "eta2_P", "Pi_p", "gamma_t", "s_t", "purity"});
    for (Index i = 0; i < tr.size(); ++i) {
        w << tr.grid[i] << tr.c_e[i].real() << tr.c_e[i].imag() << std::norm(tr.c_e[i]) << tr.eta2_P[i] << tr.Pi_p[i]
          << tr.gamma_t[i] << tr.s_t[i] << pur[i];
        w.end_row();
    }
    out.done("dynamics.csv", w);
}

void write_redundancy_rows(CsvWriter& w, const RedundancyResult& r, double gamma_t) {
    w << r.t << r.delta << (r.attained ? r.f_delta : std::numeric_limits<double>::quiet_NaN()) << r.R_delta
      << r.attained << gamma_t;
    w.end_row();
}

CsvWriter open_redundancy(Outputs& out, const std::string& name) {
    return out.open(name, {"t", "delta", "f_delta", "R_delta", "attained", "gamma_t"});
}

std::string redundancy_name(const RunConfig& c, FragmentKind kind) {
    if (c.kind != KindSelection::both) return "redundancy.csv";
    return kind == FragmentKind::subenvironments ? "redundancy_subenv.csv" : "redundancy_pseudo.csv";
}

void write_partial_info(const Setup& s, Outputs& out, int threads, bool with_split) {
    const RunConfig& c = s.config;
    std::vector<Index> idx;
    for (double t : c.t_eval) idx.push_back(s.traj.grid.index_of(t));
    const double nan = std::numeric_limits<double>::quiet_NaN();

    auto pi = out.open("partial_info.csv", {"t", "kind", "m", "f", "mean_I", "stderr_I", "mean_J", "mean_discord",
                                            "S_rho_S", "n_samples", "exact"});
    for (FragmentKind kind : c.kinds()) {
        const auto curves = partial_info_curves(s.traj, c.params, kind, idx, sampling(c, threads, with_split));
        const std::string rname = redundancy_name(c, kind);
        auto rw = open_redundancy(out, rname);
        for (std::size_t j = 0; j < curves.size(); ++j) {
            const auto& cv = curves[j];
            for (Index m = 0; m <= cv.total; ++m) {
                pi << cv.t << to_string(kind) << m << cv.fraction(m) << cv.mean_I[m] << cv.stderr_I[m]
                   << (with_split ? cv.mean_J[m] : nan) << (with_split ? cv.mean_discord[m] : nan) << cv.S_rho_S
                   << cv.n_samples[static_cast<std::size_t>(m)] << static_cast<bool>(cv.exact[static_cast<std::size_t>(m)]);
                pi.end_row();
            }
            write_redundancy_rows(rw, safe_redundancy(cv, c.params.deficit), s.traj.gamma_t[idx[j]]);
        }
        out.done(rname, rw);
    }
    out.done("partial_info.csv", pi);
}

SystemFragmentState full_fragment(const Setup& s, FragmentKind kind, Index i) {
    std::vector<Index> all(static_cast<std::size_t>(s.traj.modes()));
    std::iota(all.begin(), all.end(), Index{0});
    return reduce(s.traj, s.config.params, make_fragment(std::move(all), s.traj.modes(), kind), s.traj.grid[i]);
}

void write_correlations(const Setup& s, Outputs& out) {
    const RunConfig& c = s.config;
    auto w = out.open("correlations.csv", {"t", "kind", "qmi", "holevo_J", "discord", "S_rho_S", "argmin_theta"});
    const auto idx = series_indices(s.traj.grid, c.n_series);
    for (FragmentKind kind : c.kinds()) {
        for (Index i : idx) {
            const auto state = full_fragment(s, kind, i);
            const CorrelationSplit cs = correlation_split(state);
            w << s.traj.grid[i] << to_string(kind) << cs.qmi << cs.holevo_J << cs.discord
              << entropy2(system_marginal(state.rho)) << cs.argmin_theta;
            w.end_row();
        }
    }
    out.done("correlations.csv", w);
}

void write_redundancy_series(const Setup& s, Outputs& out, int threads) {
    const auto pts = redundancy_timeseries(s.traj, s.config.params, series_options(s.config, threads));
    auto wi = open_redundancy(out, "redundancy_subenv.csv");
    auto wii = open_redundancy(out, "redundancy_pseudo.csv");
    for (const auto& p : pts) {
        write_redundancy_rows(wi, p.case_i, p.gamma_t);
        write_redundancy_rows(wii, p.case_ii, p.gamma_t);
    }
    out.done("redundancy_subenv.csv", wi);
    out.done("redundancy_pseudo.csv", wii);
}

void write_nonmarkov(const Setup& s, Outputs& out, int threads) {
    const auto pts = redundancy_timeseries(s.traj, s.config.params, series_options(s.config, threads));
    auto w = out.open("nonmarkov.csv", {"t", "trace_distance", "sigma", "gamma_t", "R_delta_i", "R_delta_ii",
                                        "attained_i", "attained_ii"});
    for (const auto& p : pts) {
        w << p.t << p.trace_distance << p.sigma << p.gamma_t << p.case_i.R_delta << p.case_ii.R_delta
          << p.case_i.attained << p.case_ii.attained;
        w.end_row();
    }
    out.done("nonmarkov.csv", w);
    auto b = out.open("backflow.csv", {"t_start", "t_end"});
    for (const auto& iv : backflow_intervals(s.traj)) {
        b << iv.start << iv.end;
        b.end_row();
    }
    out.done("backflow.csv", b);
}

std::vector<FinalScalars> final_scalars(const Setup& s, int threads) {
    const RunConfig& c = s.config;
    const Index last = s.traj.size() - 1;
    std::vector<FinalScalars> out;
    for (FragmentKind kind : {FragmentKind::subenvironments, FragmentKind::pseudomodes}) {
        FinalScalars f;
        f.kind = kind;
        f.t = s.traj.grid[last];
        f.split = correlation_split(full_fragment(s, kind, last));
        const auto curve =
            partial_info_curves(s.traj, c.params, kind, std::span<const Index>(&last, 1), sampling(c, threads, false));
        f.redundancy = safe_redundancy(curve.front(), c.params.deficit);
        out.push_back(f);
    }
    return out;
}

void write_manifest(const RunRequest& req, const RunResult& res) {
    std::ofstream m(req.out_dir / "manifest.txt", std::ios::binary | std::ios::trunc);
    if (!m) throw InputError("cannot write " + (req.out_dir / "manifest.txt").string());
    m << "tool = darwinize " << DARWINIZE_VERSION << '\n';
    m << "command = " << to_string(req.command) << '\n';
    m << "config = " << req.config_path.string() << '\n';
    m << "seed = " << res.config.seed << '\n';
    m << "threads = " << worker_count(req.threads, 1 << 20) << '\n';
    for (const auto& o : req.overrides) m << "override = " << o << '\n';
    m << "[config]\n" << echo_config(res.config);
    m << "[outputs]\n";
    for (const auto& f : res.outputs)
        m << f.name << " sha256=" << sha256_file(req.out_dir / f.name) << " rows=" << f.rows << '\n';
    m << "wall_seconds = " << format_double(res.wall_seconds) << '\n';
    if (!m) throw InputError("failed writing manifest.txt");
}

}  // namespace

Command parse_command(std::string_view name) {
    for (const auto& [c, n] : command_names)
        if (n == name) return c;
    throw ConfigError("unknown command '" + std::string(name) + "'");
}

std::string_view to_string(Command command) {
    for (const auto& [c, n] : command_names)
        if (c == command) return n;
    return "unknown";
}

RunResult run_experiment(const RunRequest& req, bool with_final) {
    const auto start = std::chrono::steady_clock::now();
    RunResult res;
    res.config = resolve_config(req.entries);
    std::error_code ec;
    std::filesystem::create_directories(req.out_dir, ec);
    if (ec || !std::filesystem::is_directory(req.out_dir))
        throw InputError("cannot create output directory " + req.out_dir.string());

    const Setup s = make_setup(res.config);
    Outputs out(req.out_dir);
    switch (req.command) {
        case Command::dynamics:
            write_dynamics(s, out);
            break;
        case Command::partial_info:
            write_partial_info(s, out, req.threads, res.config.with_split);
            break;
        case Command::correlations:
            write_partial_info(s, out, req.threads, true);
            write_correlations(s, out);
            break;
        case Command::redundancy_series:
            write_redundancy_series(s, out, req.threads);
            break;
        case Command::nonmarkov:
            write_nonmarkov(s, out, req.threads);
            break;
    }
    if (with_final) res.final = final_scalars(s, req.threads);
    res.outputs = out.files();
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(req, res);
    return res;
}

std::vector<std::string> split_values(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos) throw ConfigError("empty value in sweep list '" + text + "'");
        out.push_back(item.substr(b, e - b + 1));
    }
    if (out.empty()) throw ConfigError("sweep needs at least one value");
    return out;
}

SweepOutcome run_sweep(const RunRequest& req, const std::string& key, const std::vector<std::string>& values) {
    if (!is_config_key(key)) throw ConfigError("unknown sweep key '" + key + "'");
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    const Index n = static_cast<Index>(values.size());
    const int pool = worker_count(req.threads, n);
    const int inner = std::max(1, worker_count(req.threads, 1 << 20) / pool);

    std::vector<std::optional<RunResult>> results(values.size());
    std::vector<std::exception_ptr> errors(values.size());
    std::atomic<bool> failed{false};
    parallel_for(n, pool, [&](Index j) {
        if (failed.load()) return;
        const auto u = static_cast<std::size_t>(j);
        RunRequest r = req;
        set_entry(r.entries, key, values[u]);
        r.overrides.push_back(key + "=" + values[u]);
        r.out_dir = req.out_dir / (key + "=" + values[u]);
        r.threads = inner;
        try {
            results[u] = run_experiment(r, true);
        } catch (...) {
            errors[u] = std::current_exception();
            failed.store(true);
        }
    });

    SweepOutcome outcome;
    std::exception_ptr first;
    std::filesystem::create_directories(req.out_dir);
    CsvWriter w(req.out_dir / "sweep_summary.csv",
                {"key", "value", "kind", "t", "qmi", "holevo_J", "discord", "R_delta", "attained"});
    for (std::size_t j = 0; j < values.size(); ++j) {
        if (errors[j]) {
            if (!first) first = errors[j];
            continue;
        }
        if (!results[j]) continue;  // not started after a failure
        for (const auto& f : results[j]->final) {
            w << key << values[j] << to_string(f.kind) << f.t << f.split.qmi << f.split.holevo_J << f.split.discord
              << f.redundancy.R_delta << f.redundancy.attained;
            w.end_row();
        }
        outcome.runs.push_back(std::move(*results[j]));
    }
    w.close();
    if (first) std::rethrow_exception(first);
    return outcome;
}

}  // namespace darwinize
