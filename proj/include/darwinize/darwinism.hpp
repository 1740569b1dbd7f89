#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "darwinize/infotheory.hpp"

namespace darwinize {

struct FragmentSample {
    std::vector<std::vector<Index>> subsets;  // each sorted
    bool exact = false;                       // all C(total, m) subsets, once each
};

// Binomial coefficient, saturating at `cap`.
std::uint64_t binomial(Index n, Index k, std::uint64_t cap);

// Uniform m-subsets of [0, total). The sample is exhaustive when
// C(total, m) ≤ max(n_samples, exhaustive_limit). Sample s of size m is drawn
// from its own counter-based stream keyed by (seed, min(m, total−m), s);
// sizes above total/2 are complements of the draws of the smaller size, so
// complementary fragment sizes carry exactly complementary subsets.
FragmentSample sample_fragments(Index total, Index m, Index n_samples, std::uint64_t seed,
                                Index exhaustive_limit = 512);

struct PartialInfoOptions {
    Index n_samples = 200;
    std::uint64_t seed = 42;
    bool with_split = false;
    Index exhaustive_limit = 512;
    int threads = 1;  // 0 = hardware concurrency
};

struct PartialInfoCurve {
    double t = 0.0;
    FragmentKind kind = FragmentKind::subenvironments;
    Index total = 0;
    double S_rho_S = 0.0;
    // per fragment size m = 0..total
    Eigen::VectorXd mean_I, stderr_I, mean_J, mean_discord;
    std::vector<Index> n_samples;
    std::vector<bool> exact;
    bool with_split = false;

    [[nodiscard]] double fraction(Index m) const { return static_cast<double>(m) / static_cast<double>(total); }
};

PartialInfoCurve partial_info_curve(const Trajectory& traj, const PhysicalParams& params,
                                    const PseudomodeEnsemble& ensemble, FragmentKind kind, double t,
                                    const PartialInfoOptions& options = {});

// Curves at several grid indices from one set of sampled fragments.
std::vector<PartialInfoCurve> partial_info_curves(const Trajectory& traj, const PhysicalParams& params,
                                                  FragmentKind kind, std::span<const Index> time_indices,
                                                  const PartialInfoOptions& options = {});

struct RedundancyResult {
    double t = 0.0;
    double delta = 0.0;
    double f_delta = 0.0;
    double R_delta = 0.0;  // 0 when not attained
    bool attained = false;
    Index m_below = -1;    // bracketing fragment sizes of the crossing
    Index m_above = -1;
};

// Smallest f where ⟨I(f)⟩, interpolated linearly between fragment sizes,
// reaches (1−δ)S(ρ_S). f_δ is kept ≥ 1/#E.
RedundancyResult redundancy(const PartialInfoCurve& curve, double delta);

}  // namespace darwinize
