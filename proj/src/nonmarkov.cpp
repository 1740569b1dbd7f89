#include "darwinize/nonmarkov.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace darwinize {

double trace_distance(const StatePair& pair, Complex G) {
    const double g = std::abs(G);
    return g * std::sqrt(g * g * pair.a * pair.a + std::norm(pair.b));
}

double sigma(const StatePair& pair, Complex G, Complex Gdot) {
    const double g = std::abs(G);
    const double root = std::sqrt(g * g * pair.a * pair.a + std::norm(pair.b));
    if (!(root > 1e-14)) throw UndefinedWitness("state pair indistinguishable at this time");
    if (g == 0.0) return 0.0;
    const double dg = (std::conj(G) * Gdot).real() / g;
    return dg * (2.0 * g * g * pair.a * pair.a + std::norm(pair.b)) / root;
}

std::vector<Interval> backflow_intervals(const Trajectory& traj) {
    const Eigen::VectorXd& gamma = traj.gamma_t;
    const TimeGrid& grid = traj.grid;
    const Index n = gamma.size();
    std::vector<Interval> out;
    auto crossing = [&](Index i, Index j) {
        // zero of the linear interpolant between a finite non-negative and a
        // negative sample
        const double gi = gamma[i], gj = gamma[j];
        return grid[i] + (grid[j] - grid[i]) * gi / (gi - gj);
    };
    Index i = 0;
    while (i < n) {
        if (!(gamma[i] < 0.0)) {
            ++i;
            continue;
        }
        const Index first = i;
        while (i < n && gamma[i] < 0.0) ++i;
        const Index last = i - 1;
        Interval iv;
        if (first == 0)
            iv.start = grid[0];
        else if (std::isnan(gamma[first - 1]))
            iv.start = grid[first - 1];
        else
            iv.start = crossing(first - 1, first);
        if (last == n - 1)
            iv.end = grid[n - 1];
        else if (std::isnan(gamma[last + 1]))
            iv.end = grid[last + 1];
        else
            iv.end = crossing(last + 1, last);
        out.push_back(iv);
    }
    return out;
}

std::vector<Index> series_indices(const TimeGrid& grid, Index n_points) {
    if (n_points < 1) throw InvalidParameter("n_series must be at least 1");
    std::vector<Index> out;
    for (Index j = 1; j <= n_points; ++j) {
        const double pos = static_cast<double>(j) * static_cast<double>(grid.n_steps()) / static_cast<double>(n_points);
        const Index i = static_cast<Index>(std::llround(pos));
        if (i > 0 && (out.empty() || i > out.back())) out.push_back(i);
    }
    return out;
}

namespace {

RedundancyResult not_attained(double t, double delta) {
    RedundancyResult r;
    r.t = t;
    r.delta = delta;
    return r;
}

std::vector<RedundancyResult> series_for(const Trajectory& traj, const PhysicalParams& params, FragmentKind kind,
                                         const std::vector<Index>& idx, const SeriesOptions& options) {
    const auto curves = partial_info_curves(traj, params, kind, idx, options.sampling);
    std::vector<RedundancyResult> out;
    out.reserve(curves.size());
    for (const auto& c : curves) {
        try {
            out.push_back(redundancy(c, options.delta));
        } catch (const UndefinedRedundancy&) {
            out.push_back(not_attained(c.t, options.delta));
        }
    }
    return out;
}

}  // namespace

std::vector<RedundancyPoint> redundancy_timeseries(const Trajectory& traj, const PhysicalParams& params,
                                                   const SeriesOptions& options) {
    if (params.gamma > options.max_gamma_ratio_ii * params.gamma_plus())
        throw InvalidParameter("case (ii) redundancy needs gamma <= " + std::to_string(options.max_gamma_ratio_ii) +
                               " gamma_plus (set max_gamma_ratio_ii to override)");
    const std::vector<Index> idx = series_indices(traj.grid, options.n_points);
    const auto r_i = series_for(traj, params, FragmentKind::subenvironments, idx, options);
    const auto r_ii = series_for(traj, params, FragmentKind::pseudomodes, idx, options);
    std::vector<RedundancyPoint> out(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) {
        const Index i = idx[j];
        auto& p = out[j];
        p.index = i;
        p.t = traj.grid[i];
        p.gamma_t = traj.gamma_t[i];
        p.trace_distance = trace_distance(options.witness, traj.green[i]);
        try {
            p.sigma = sigma(options.witness, traj.green[i], traj.green_dot[i]);
        } catch (const UndefinedWitness&) {
            p.sigma = std::numeric_limits<double>::quiet_NaN();
        }
        p.case_i = r_i[j];
        p.case_ii = r_ii[j];
    }
    return out;
}

}  // namespace darwinize
