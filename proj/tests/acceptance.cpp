// Acceptance run: one PASS/FAIL line per criterion at the pinned tolerances.
//
//   acceptance [--only id]... [--expect-fail id]...
//
// Exits 0 when the set of failing criteria equals the expected set.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "darwinize/experiment.hpp"
#include "darwinize/measurement.hpp"
#include "darwinize/nonmarkov.hpp"

using namespace darwinize;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    std::string id;
    std::string title;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

PhysicalParams params(double gamma_plus, double gamma_ratio, double detuning_ratio) {
    PhysicalParams p;
    p.gamma = gamma_ratio * gamma_plus;
    p.gamma_w = gamma_plus - p.gamma;
    p.detuning = detuning_ratio * gamma_plus;
    return p;
}

// The eight parameter sets Γ₊ ∈ {1, 10} × Γ/Γ₊ ∈ {1e-3, 0.4} × Δ/Γ₊ ∈ {0, 0.05}.
std::vector<PhysicalParams> paper_sets() {
    std::vector<PhysicalParams> out;
    for (double gp : {1.0, 10.0})
        for (double gr : {1e-3, 0.4})
            for (double d : {0.0, 0.05}) out.push_back(params(gp, gr, d));
    return out;
}

constexpr Index n_env = 150;
const TimeGrid standard_grid(50.0, 2000);

Outcome ode_closed_form() {
    double worst_c = 0.0, worst_b = 0.0;
    for (const auto& p : paper_sets()) {
        const auto e = build_ensemble(p, n_env);
        const TimeGrid grid(50.0, required_steps(p, e, 50.0));
        const auto tr = ode_oracle(p, e, grid);
        for (Index i = 0; i < grid.size(); ++i) {
            worst_c = std::max(worst_c, std::abs(tr.c_e[i] - p.ce0 * green_function(p, grid[i])));
            for (Index k = 0; k < e.count(); ++k)
                worst_b = std::max(worst_b, std::abs(tr.b(k, i) - p.ce0 * pseudomode_amplitude(p, e.detunings[k],
                                                                                              e.couplings[k], grid[i])));
        }
    }
    return {worst_c < 1e-6 && worst_b < 1e-6, fmt("max |dc_e| %.2e, max |db_k| %.2e", worst_c, worst_b)};
}

Outcome bookkeeping() {
    double worst = 0.0;
    for (auto scheme : {EnsembleScheme::grid, EnsembleScheme::quantile})
        for (const auto& p : paper_sets()) {
            const auto tr = build_trajectory(p, build_ensemble(p, n_env, scheme), standard_grid);
            const double ref = std::norm(p.ce0);
            for (Index i = 0; i < tr.size(); ++i)
                worst = std::max(worst, std::abs(std::norm(tr.c_e[i]) + tr.eta2_P[i] + tr.Pi_p[i] - ref));
        }
    return {worst < 1e-6, fmt("max residual %.2e over 16 runs", worst)};
}

Outcome weak_rate() {
    const auto p = params(10.0, 1e-3, 0.0);
    const Index lo = standard_grid.index_of(2.0), hi = standard_grid.index_of(5.0);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(hi - lo + 1);
    for (Index i = lo; i <= hi; ++i) {
        const double x = standard_grid[i], y = std::log(std::norm(green_function(p, x)));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double rate = -(n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double markov = 4.0 * p.coupling * p.coupling / p.gamma_plus();
    const double rel = std::abs(rate - markov) / markov;
    return {rel < 0.05, fmt("fitted %.4f vs %.4f, rel %.2e", rate, markov, rel)};
}

Outcome quasibound() {
    const auto p = params(1.0, 1e-3, 0.0);
    const auto e = build_ensemble(p, n_env);
    const auto tr = build_trajectory(p, e, standard_grid);
    const auto q = quasibound_prediction(p, e);
    double worst = 0.0;
    for (Index i = standard_grid.index_of(20.0); i < standard_grid.size(); ++i) {
        const double pred = q.value * std::exp(-p.gamma * standard_grid[i]);
        worst = std::max(worst, std::abs(tr.eta2_P[i] - pred) / pred);
    }
    return {q.in_regime && worst < 0.05, fmt("prefactor %.4f, max rel %.2e", q.value, worst)};
}

Outcome antisymmetry() {
    const auto p = params(1.0, 1e-3, 0.0);
    double sampled_ratio = 0.0, exact_worst = 0.0, sampled_worst = 0.0;
    bool ok = true;
    {
        const auto tr = build_trajectory(p, build_ensemble(p, n_env), standard_grid);
        for (double t : {5.0, 20.0, 50.0}) {
            const auto c = partial_info_curves(tr, p, FragmentKind::subenvironments,
                                               std::vector<Index>{standard_grid.index_of(t)})
                               .front();
            for (Index m = 0; m <= n_env; ++m) {
                const double d = std::abs(c.mean_I[m] + c.mean_I[n_env - m] - 2.0 * c.S_rho_S);
                const double se = std::hypot(c.stderr_I[m], c.stderr_I[n_env - m]);
                sampled_worst = std::max(sampled_worst, d);
                if (c.exact[m] && c.exact[n_env - m]) {
                    ok = ok && d < 1e-9;
                } else {
                    ok = ok && d < 3.0 * se;
                    sampled_ratio = std::max(sampled_ratio, d / se);
                }
            }
        }
    }
    {
        const Index n = 12;
        const auto tr = build_trajectory(p, build_ensemble(p, n), standard_grid);
        PartialInfoOptions o;
        o.exhaustive_limit = 1000;
        for (double t : {5.0, 20.0, 50.0}) {
            const auto c = partial_info_curves(tr, p, FragmentKind::subenvironments,
                                               std::vector<Index>{standard_grid.index_of(t)}, o)
                               .front();
            for (Index m = 0; m <= n; ++m) {
                ok = ok && c.exact[m];
                exact_worst = std::max(exact_worst, std::abs(c.mean_I[m] + c.mean_I[n - m] - 2.0 * c.S_rho_S));
            }
        }
    }
    ok = ok && exact_worst < 1e-9;
    return {ok, fmt("sampled max %.2e (max %.2f stderr), exhaustive #E=12 max %.2e", sampled_worst, sampled_ratio,
                    exact_worst)};
}

Outcome analytic() {
    double uniform = 0.0;
    {
        PhysicalParams p;
        p.gamma = 1e-3;
        p.gamma_w = 0.0;
        const auto tr = build_trajectory(p, build_ensemble(p, n_env), standard_grid);
        for (double t : {5.0, 20.0, 50.0}) {
            const Index i = standard_grid.index_of(t);
            const double ce2 = std::norm(tr.c_e[i]);
            for (auto kind : {FragmentKind::subenvironments, FragmentKind::pseudomodes}) {
                const auto c = partial_info_curves(tr, p, kind, std::vector<Index>{i}).front();
                for (Index m = 0; m <= n_env; ++m) {
                    const double f = c.fraction(m);
                    const double a = kind == FragmentKind::subenvironments
                                         ? analytic_partial_info_E(f, ce2, tr.eta2_E[i])
                                         : analytic_partial_info_P(f, ce2, tr.eta2_P[i], tr.Pi_p[i]);
                    uniform = std::max(uniform, std::abs(c.mean_I[m] - a));
                }
            }
        }
    }
    double lorentz = 0.0, at = 0.0;
    {
        const auto p = params(1.0, 1e-3, 0.0);
        const auto tr = build_trajectory(p, build_ensemble(p, n_env), standard_grid);
        const Index i = standard_grid.size() - 1;
        const double ce2 = std::norm(tr.c_e[i]);
        for (auto kind : {FragmentKind::subenvironments, FragmentKind::pseudomodes}) {
            const auto c = partial_info_curves(tr, p, kind, std::vector<Index>{i}).front();
            for (Index m = 0; m <= n_env; ++m) {
                const double f = c.fraction(m);
                if (f < 0.05 - 1e-12 || f > 0.95 + 1e-12) continue;
                const double a = kind == FragmentKind::subenvironments
                                     ? analytic_partial_info_E(f, ce2, tr.eta2_E[i])
                                     : analytic_partial_info_P(f, ce2, tr.eta2_P[i], tr.Pi_p[i]);
                const double rel = std::abs(c.mean_I[m] - a) / a;
                if (rel > lorentz) {
                    lorentz = rel;
                    at = f;
                }
            }
        }
    }
    const bool u_ok = uniform < 1e-9, l_ok = lorentz < 0.02;
    return {u_ok && l_ok, fmt("uniform max %.2e (%s); Lorentzian max rel %.2e at f=%.3f (%s)", uniform,
                              u_ok ? "ok" : "over 1e-9", lorentz, at, l_ok ? "ok" : "over 2%")};
}

Outcome correlation_split_checks() {
    double pure = 0.0, sum = 0.0;
    {
        const auto p = params(1.0, 1e-3, 0.0);
        const auto tr = build_trajectory(p, build_ensemble(p, n_env), standard_grid);
        std::vector<Index> all(static_cast<std::size_t>(n_env));
        for (Index k = 0; k < n_env; ++k) all[static_cast<std::size_t>(k)] = k;
        const auto full = make_fragment(all, n_env, FragmentKind::subenvironments);
        for (Index i : series_indices(standard_grid, 16)) {
            const auto st = reduce(tr, p, full, standard_grid[i]);
            const auto cs = correlation_split(st);
            const double s = entropy2(system_marginal(st.rho));
            pure = std::max({pure, std::abs(cs.holevo_J - s), std::abs(cs.discord - s)});
        }
        PartialInfoOptions o;
        o.n_samples = 20;
        o.with_split = true;
        for (auto kind : {FragmentKind::subenvironments, FragmentKind::pseudomodes}) {
            const std::vector<Index> idx{standard_grid.index_of(5.0), standard_grid.index_of(25.0),
                                         standard_grid.size() - 1};
            for (const auto& c : partial_info_curves(tr, p, kind, idx, o))
                sum = std::max(sum, (c.mean_J + c.mean_discord - c.mean_I).cwiseAbs().maxCoeff());
        }
    }
    double ratio = 0.0;
    {
        const auto p = params(1.0, 0.4, 0.0);
        const auto tr = build_trajectory(p, build_ensemble(p, n_env), standard_grid);
        std::vector<Index> all(static_cast<std::size_t>(n_env));
        for (Index k = 0; k < n_env; ++k) all[static_cast<std::size_t>(k)] = k;
        const auto cs = correlation_split(reduce(tr, p, make_fragment(all, n_env, FragmentKind::pseudomodes), 50.0));
        ratio = cs.holevo_J / cs.qmi;
        sum = std::max(sum, std::abs(cs.holevo_J + cs.discord - cs.qmi));
    }
    return {pure < 1e-8 && sum < 1e-8 && ratio < 0.05,
            fmt("pure f=1 max %.2e, J+discord-I max %.2e, lossy J/I %.2e", pure, sum, ratio)};
}

Outcome phi_invariance() {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int n = 0; n < 50; ++n) {
        const double ce2 = 0.9 * u(rng);
        const double eta2 = (1 - ce2) * u(rng);
        const auto rho = collective_state(eta2, std::polar(std::sqrt(ce2), 6.283185307179586 * u(rng)), Complex(0.0));
        for (int k = 0; k < 8; ++k) {
            const double th = 3.141592653589793 * u(rng);
            const double ref = conditional_entropy(rho, {th, 0.0});
            for (int l = 1; l < 12; ++l)
                worst = std::max(worst, std::abs(conditional_entropy(rho, {th, 6.283185307179586 * l / 12}) - ref));
        }
    }
    return {worst < 1e-10, fmt("max spread %.2e", worst)};
}

Outcome blp() {
    Index checked = 0, mismatched = 0, positive = 0;
    bool strong_has_backflow = false;
    for (double gp : {1.0, 10.0}) {
        const auto p = params(gp, 1e-3, 0.0);
        const auto tr = build_trajectory(p, build_ensemble(p, n_env), standard_grid);
        for (StatePair pair : {StatePair{1.0, Complex(0.0)}, StatePair{0.4, Complex(0.1, 0.3)}})
            for (Index i = 0; i < tr.size(); ++i) {
                const double g = tr.gamma_t[i];
                if (!(std::abs(g) > 1e-10) || !(std::abs(tr.green[i]) > 1e-7)) continue;
                const double s = sigma(pair, tr.green[i], tr.green_dot[i]);
                ++checked;
                if ((s > 0) != (g < 0) || (s < 0) != (g > 0)) ++mismatched;
                if (s > 0) {
                    ++positive;
                    if (gp == 1.0) strong_has_backflow = true;
                }
            }
    }
    return {mismatched == 0 && strong_has_backflow,
            fmt("%ld points, %ld sign mismatches, %ld with sigma>0", long(checked), long(mismatched), long(positive))};
}

std::vector<RedundancyPoint> series(const PhysicalParams& p, EnsembleScheme scheme) {
    const auto tr = build_trajectory(p, build_ensemble(p, n_env, scheme), standard_grid);
    SeriesOptions o;
    o.n_points = 64;
    o.delta = p.deficit;
    return redundancy_timeseries(tr, p, o);
}

struct BackflowVerdict {
    Index intervals = 0;
    Index matched = 0;       // strong coupling: intervals showing a decrease
    Index decreases = 0;     // weak coupling: steps where R drops
    bool ok = false;
};

// Strong coupling: every γ < 0 interval contains a sampled step, ending
// inside it, along which R_δ strictly drops.
BackflowVerdict strong_verdict(const PhysicalParams& p, EnsembleScheme scheme) {
    const auto tr = build_trajectory(p, build_ensemble(p, n_env, scheme), standard_grid);
    const auto iv = backflow_intervals(tr);
    const auto s = series(p, scheme);
    BackflowVerdict v;
    v.intervals = static_cast<Index>(iv.size());
    for (const auto& in : iv) {
        bool seen_i = false, seen_ii = false;
        for (std::size_t j = 1; j < s.size(); ++j) {
            if (s[j].t < in.start || s[j].t > in.end) continue;
            const auto &a = s[j - 1], &b = s[j];
            if (a.case_i.attained && b.case_i.attained && b.case_i.R_delta < a.case_i.R_delta) seen_i = true;
            if (a.case_ii.attained && b.case_ii.attained && b.case_ii.R_delta < a.case_ii.R_delta) seen_ii = true;
        }
        if (seen_i && seen_ii) ++v.matched;
    }
    v.ok = v.intervals > 0 && v.matched == v.intervals;
    return v;
}

BackflowVerdict weak_verdict(const PhysicalParams& p, EnsembleScheme scheme) {
    const auto s = series(p, scheme);
    BackflowVerdict v;
    for (std::size_t j = 1; j < s.size(); ++j) {
        if (s[j].case_i.R_delta < s[j - 1].case_i.R_delta) ++v.decreases;
        if (s[j].case_ii.R_delta < s[j - 1].case_ii.R_delta) ++v.decreases;
    }
    v.ok = v.decreases == 0;
    return v;
}

std::string grid_note;

Outcome redundancy_backflow() {
    const auto strong = params(1.0, 1e-3, 0.05);
    const auto weak = params(10.0, 1e-3, 0.05);
    const auto s = strong_verdict(strong, EnsembleScheme::quantile);
    const auto w = weak_verdict(weak, EnsembleScheme::quantile);
    const auto sg = strong_verdict(strong, EnsembleScheme::grid);
    const auto wg = weak_verdict(weak, EnsembleScheme::grid);
    grid_note = fmt("grid scheme: strong %ld/%ld intervals, weak %ld decreasing steps", long(sg.matched),
                    long(sg.intervals), long(wg.decreases));
    return {s.ok && w.ok, fmt("quantile scheme: strong %ld/%ld intervals show a drop, weak %ld decreasing steps",
                              long(s.matched), long(s.intervals), long(w.decreases))};
}

Outcome monotone_qmi() {
    std::mt19937_64 rng(77);
    double worst = 0.0;
    Index pairs = 0;
    for (double gr : {1e-3, 0.4}) {
        const auto p = params(1.0, gr, 0.05);
        const auto tr = build_trajectory(p, build_ensemble(p, n_env), standard_grid);
        std::uniform_int_distribution<Index> when(1, standard_grid.size() - 1);
        for (int n = 0; n < 250; ++n)
            for (auto kind : {FragmentKind::subenvironments, FragmentKind::pseudomodes}) {
                std::vector<Index> perm(static_cast<std::size_t>(n_env));
                for (Index k = 0; k < n_env; ++k) perm[static_cast<std::size_t>(k)] = k;
                std::shuffle(perm.begin(), perm.end(), rng);
                std::uniform_int_distribution<Index> size(0, n_env);
                Index a = size(rng), b = size(rng);
                if (a > b) std::swap(a, b);
                const double t = standard_grid[when(rng)];
                const std::vector<Index> small(perm.begin(), perm.begin() + a), large(perm.begin(), perm.begin() + b);
                const double is = qmi(reduce(tr, p, make_fragment(small, n_env, kind), t));
                const double il = qmi(reduce(tr, p, make_fragment(large, n_env, kind), t));
                worst = std::max(worst, is - il);
                ++pairs;
            }
    }
    return {worst < 1e-9, fmt("%ld nested pairs, max I(small)-I(large) %.2e", long(pairs), worst)};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism() {
    const auto root = std::filesystem::temp_directory_path() / "darwinize_acceptance";
    std::filesystem::remove_all(root);
    const ConfigEntries entries = parse_config(
        "n_modes = 60\nn_samples = 40\nkind = both\nt_eval = 10,30,50\nwith_split = true\nseed = 1234\n");
    std::vector<std::string> names;
    std::vector<std::vector<std::string>> contents;
    for (int threads : {1, 4}) {
        RunRequest req;
        req.command = Command::partial_info;
        req.config_path = "inline";
        req.out_dir = root / ("threads" + std::to_string(threads));
        req.entries = entries;
        req.threads = threads;
        std::filesystem::create_directories(req.out_dir);
        const auto res = run_experiment(req);
        std::vector<std::string> c;
        names.clear();
        for (const auto& o : res.outputs) {
            names.push_back(o.name);
            c.push_back(slurp(req.out_dir / o.name));
        }
        contents.push_back(std::move(c));
    }
    std::filesystem::remove_all(root);
    const bool same = contents[0] == contents[1] && !names.empty();
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    return {same, fmt("%s %s between 1 and 4 threads", list.c_str(), same ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app("darwinize acceptance run");
    std::vector<std::string> only, expect_fail;
    app.add_option("--only", only, "run only these criteria");
    app.add_option("--expect-fail", expect_fail, "criteria known to fail");
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria = {
        {"ode-closed-form", "closed forms agree with the ODE oracle to 1e-6", ode_closed_form},
        {"bookkeeping", "excitation bookkeeping to 1e-6", bookkeeping},
        {"weak-rate", "weak-coupling decay rate within 5% of 4 Omega0^2/Gamma+", weak_rate},
        {"quasibound", "quasi-bound pseudomode population within 5% on [20, 50]", quasibound},
        {"antisymmetry", "pure-state antisymmetry of the partial-information curve", antisymmetry},
        {"analytic", "analytic partial information: uniform 1e-9, Lorentzian 2%", analytic},
        {"correlation-split", "classical/quantum split of the correlations", correlation_split_checks},
        {"phi-invariance", "conditional entropy independent of phi to 1e-10", phi_invariance},
        {"blp", "sign(sigma) = -sign(gamma) at strong and weak coupling", blp},
        {"redundancy-backflow", "redundancy drops inside every backflow interval, rises otherwise",
         redundancy_backflow},
        {"monotone-qmi", "mutual information grows with the fragment, 1e-9", monotone_qmi},
        {"determinism", "partial-info outputs independent of the thread count", determinism},
    };

    std::set<std::string> known;
    for (const auto& c : criteria) known.insert(c.id);
    for (const auto& id : only)
        if (!known.count(id)) {
            std::fprintf(stderr, "unknown criterion %s\n", id.c_str());
            return 2;
        }
    for (const auto& id : expect_fail)
        if (!known.count(id)) {
            std::fprintf(stderr, "unknown criterion %s\n", id.c_str());
            return 2;
        }

    std::set<std::string> failed, ran;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        ran.insert(c.id);
        const auto t0 = std::chrono::steady_clock::now();
        Outcome r;
        try {
            r = c.run();
        } catch (const std::exception& e) {
            r = {false, std::string("threw: ") + e.what()};
        }
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!r.pass) failed.insert(c.id);
        std::printf("%s %-20s %s: %s [%.1fs]\n", r.pass ? "PASS" : "FAIL", c.id.c_str(), c.title.c_str(),
                    r.detail.c_str(), sec);
        if (c.id == "redundancy-backflow" && !grid_note.empty()) std::printf("     note: %s\n", grid_note.c_str());
        std::fflush(stdout);
    }

    std::set<std::string> expected;
    for (const auto& id : expect_fail)
        if (ran.count(id)) expected.insert(id);
    std::printf("%zu/%zu criteria pass", ran.size() - failed.size(), ran.size());
    if (!expected.empty()) std::printf(", %zu expected to fail", expected.size());
    std::printf("\n");
    if (failed != expected) {
        for (const auto& id : failed)
            if (!expected.count(id)) std::printf("unexpected failure: %s\n", id.c_str());
        for (const auto& id : expected)
            if (!failed.count(id)) std::printf("expected failure now passes: %s\n", id.c_str());
        return 1;
    }
    return 0;
}
