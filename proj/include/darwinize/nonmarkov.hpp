#pragma once

#include <vector>

#include "darwinize/darwinism.hpp"

namespace darwinize {

// Two initial qubit states through their differences: a in excited
// population, b in the |e⟩⟨g| coherence.
struct StatePair {
    double a = 1.0;
    Complex b{0.0, 0.0};
};

// D = |G| sqrt(|G|²a² + |b|²).
double trace_distance(const StatePair& pair, Complex G);

// dD/dt, with the signed d|G|/dt = Re(G*Ġ)/|G|; positive exactly when the
// qubit population revives.
double sigma(const StatePair& pair, Complex G, Complex Gdot);

struct Interval {
    double start = 0.0;
    double end = 0.0;
};

// Maximal intervals with γ(t) < 0. Ends are placed at the linearly
// interpolated zero crossing, or at a singular point of γ.
std::vector<Interval> backflow_intervals(const Trajectory& traj);

struct SeriesOptions {
    Index n_points = 64;
    double delta = 0.15;
    double max_gamma_ratio_ii = 0.01;  // case (ii) needs Γ ≤ this × Γ₊
    StatePair witness;
    PartialInfoOptions sampling;
};

struct RedundancyPoint {
    Index index = 0;
    double t = 0.0;
    double gamma_t = 0.0;
    double trace_distance = 0.0;
    double sigma = 0.0;
    RedundancyResult case_i;
    RedundancyResult case_ii;
};

// Grid indices of n_points evenly spaced times in (0, t_max].
std::vector<Index> series_indices(const TimeGrid& grid, Index n_points);

// R_δ for both fragment kinds together with the trace-distance witness on
// series_indices(grid, n_points). Times where S(ρ_S) vanishes are reported
// as not attained.
std::vector<RedundancyPoint> redundancy_timeseries(const Trajectory& traj, const PhysicalParams& params,
                                                   const SeriesOptions& options = {});

}  // namespace darwinize
