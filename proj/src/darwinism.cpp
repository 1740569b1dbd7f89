#include "darwinize/darwinism.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "darwinize/measurement.hpp"
#include "darwinize/parallel.hpp"

namespace darwinize {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t stream_key(std::uint64_t seed, Index m, Index s) {
    const std::uint64_t a = splitmix64(seed);
    const std::uint64_t b = splitmix64(a ^ static_cast<std::uint64_t>(m));
    return splitmix64(b ^ static_cast<std::uint64_t>(s));
}

// Floyd's algorithm: k distinct values from [0, n) in k draws.
std::vector<Index> floyd(Index n, Index k, std::mt19937_64& rng) {
    std::vector<char> taken(static_cast<std::size_t>(n), 0);
    std::vector<Index> out;
    out.reserve(static_cast<std::size_t>(k));
    for (Index j = n - k; j < n; ++j) {
        std::uniform_int_distribution<Index> pick(0, j);
        const Index t = pick(rng);
        const Index v = taken[static_cast<std::size_t>(t)] ? j : t;
        taken[static_cast<std::size_t>(v)] = 1;
        out.push_back(v);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Index> complement(const std::vector<Index>& subset, Index n) {
    std::vector<Index> out;
    out.reserve(static_cast<std::size_t>(n) - subset.size());
    auto it = subset.begin();
    for (Index i = 0; i < n; ++i) {
        if (it != subset.end() && *it == i)
            ++it;
        else
            out.push_back(i);
    }
    return out;
}

__extension__ using Wide = unsigned __int128;

}  // namespace

std::uint64_t binomial(Index n, Index k, std::uint64_t cap) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    // r stays an exact binomial C(n−k+i, i) at every step.
    Wide r = 1;
    for (Index i = 1; i <= k; ++i) {
        r = r * static_cast<Wide>(n - k + i) / static_cast<Wide>(i);
        if (r > cap) return cap;
    }
    return static_cast<std::uint64_t>(r);
}

FragmentSample sample_fragments(Index total, Index m, Index n_samples, std::uint64_t seed,
                                Index exhaustive_limit) {
    if (total < 0 || m < 0 || m > total)
        throw InvalidParameter("fragment size " + std::to_string(m) + " outside [0, " + std::to_string(total) + "]");
    if (n_samples < 1) throw InvalidParameter("n_samples must be at least 1");
    const Index k = std::min(m, total - m);
    const bool flip = k != m;
    const auto limit = static_cast<std::uint64_t>(std::max(n_samples, exhaustive_limit));
    const std::uint64_t count = binomial(total, k, limit + 1);

    FragmentSample out;
    auto emit = [&](std::vector<Index> subset) {
        out.subsets.push_back(flip ? complement(subset, total) : std::move(subset));
    };
    if (count <= limit) {
        out.exact = true;
        out.subsets.reserve(count);
        std::vector<Index> c(static_cast<std::size_t>(k));
        for (Index i = 0; i < k; ++i) c[static_cast<std::size_t>(i)] = i;
        while (true) {
            emit(c);
            Index i = k - 1;
            while (i >= 0 && c[static_cast<std::size_t>(i)] == total - k + i) --i;
            if (i < 0) break;
            ++c[static_cast<std::size_t>(i)];
            for (Index j = i + 1; j < k; ++j) c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] + 1;
        }
        return out;
    }
    out.subsets.reserve(static_cast<std::size_t>(n_samples));
    for (Index s = 0; s < n_samples; ++s) {
        std::mt19937_64 rng(stream_key(seed, k, s));
        emit(floyd(total, k, rng));
    }
    return out;
}

std::vector<PartialInfoCurve> partial_info_curves(const Trajectory& traj, const PhysicalParams& params,
                                                  FragmentKind kind, std::span<const Index> time_indices,
                                                  const PartialInfoOptions& options) {
    const Index n = traj.modes();
    const Index nt = static_cast<Index>(time_indices.size());
    for (Index i : time_indices)
        if (i < 0 || i >= traj.size()) throw DomainError("time index outside the trajectory");

    // Excitation per mode at each requested time.
    Eigen::MatrixXd pop(n, nt);
    for (Index j = 0; j < nt; ++j) pop.col(j) = fragment_populations(traj, kind, time_indices[j]);

    std::vector<PartialInfoCurve> curves(static_cast<std::size_t>(nt));
    for (Index j = 0; j < nt; ++j) {
        auto& c = curves[static_cast<std::size_t>(j)];
        const Index i = time_indices[j];
        c.t = traj.grid[i];
        c.kind = kind;
        c.total = n;
        c.with_split = options.with_split;
        c.S_rho_S = entropy2(system_marginal(collective_state(0.0, traj.c_e[i], params.cg)));
        c.mean_I = c.stderr_I = c.mean_J = c.mean_discord = Eigen::VectorXd::Zero(n + 1);
        c.n_samples.assign(static_cast<std::size_t>(n + 1), 0);
        c.exact.assign(static_cast<std::size_t>(n + 1), false);
    }

    std::vector<char> exact(static_cast<std::size_t>(n + 1));
    std::vector<Index> counts(static_cast<std::size_t>(n + 1));
    parallel_for(n + 1, options.threads, [&](Index m) {
        const FragmentSample sample = sample_fragments(n, m, options.n_samples, options.seed, options.exhaustive_limit);
        const Index ns = static_cast<Index>(sample.subsets.size());
        exact[static_cast<std::size_t>(m)] = sample.exact;
        counts[static_cast<std::size_t>(m)] = ns;
        for (Index j = 0; j < nt; ++j) {
            const Index i = time_indices[j];
            auto& c = curves[static_cast<std::size_t>(j)];
            std::vector<double> values;
            values.reserve(static_cast<std::size_t>(ns));
            double sum_j = 0.0, sum_d = 0.0;
            for (const auto& subset : sample.subsets) {
                double eta2 = 0.0;
                for (Index k : subset) eta2 += pop(k, j);
                const Density4<double> rho = collective_state(eta2, traj.c_e[i], params.cg);
                if (options.with_split) {
                    const CorrelationSplit split = correlation_split(rho);
                    values.push_back(split.qmi);
                    sum_j += split.holevo_J;
                    sum_d += split.discord;
                } else {
                    values.push_back(qmi(rho));
                }
            }
            const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(ns);
            c.mean_I[m] = mean;
            c.mean_J[m] = sum_j / static_cast<double>(ns);
            c.mean_discord[m] = sum_d / static_cast<double>(ns);
            if (!sample.exact && ns > 1) {
                // two passes: the spread can sit far below the rounding of Σv²
                double ss = 0.0;
                for (double v : values) ss += (v - mean) * (v - mean);
                const double var = ss / static_cast<double>(ns - 1);
                c.stderr_I[m] = std::sqrt(var / static_cast<double>(ns));
            }
        }
    });
    for (auto& c : curves)
        for (Index m = 0; m <= n; ++m) {
            c.exact[static_cast<std::size_t>(m)] = exact[static_cast<std::size_t>(m)] != 0;
            c.n_samples[static_cast<std::size_t>(m)] = counts[static_cast<std::size_t>(m)];
        }
    return curves;
}

PartialInfoCurve partial_info_curve(const Trajectory& traj, const PhysicalParams& params,
                                    const PseudomodeEnsemble& ensemble, FragmentKind kind, double t,
                                    const PartialInfoOptions& options) {
    if (ensemble.count() != traj.modes()) throw InvalidParameter("ensemble does not match the trajectory");
    const Index i = traj.grid.index_of(t);
    return partial_info_curves(traj, params, kind, std::span<const Index>(&i, 1), options).front();
}

RedundancyResult redundancy(const PartialInfoCurve& curve, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidParameter("deficit must lie in (0, 1)");
    if (curve.total < 1 || curve.mean_I.size() < 2) throw InvalidParameter("redundancy needs at least two curve points");
    if (curve.S_rho_S < 1e-12) throw UndefinedRedundancy("S(rho_S) vanishes; no information to share");
    RedundancyResult r;
    r.t = curve.t;
    r.delta = delta;
    const double target = (1.0 - delta) * curve.S_rho_S;
    const Index n = curve.total;
    for (Index m = 1; m <= n; ++m) {
        if (curve.mean_I[m] < target) continue;
        const double lo = curve.mean_I[m - 1];
        const double hi = curve.mean_I[m];
        const double frac = hi > lo ? std::clamp((target - lo) / (hi - lo), 0.0, 1.0) : 1.0;
        r.f_delta = std::max((static_cast<double>(m - 1) + frac) / static_cast<double>(n), 1.0 / static_cast<double>(n));
        r.R_delta = 1.0 / r.f_delta;
        r.attained = true;
        r.m_below = m - 1;
        r.m_above = m;
        return r;
    }
    return r;
}

}  // namespace darwinize
