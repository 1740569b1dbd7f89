#pragma once

#include <vector>

#include "darwinize/model.hpp"

namespace darwinize {

// Time-gridded single-excitation dynamics.
//
// `b` holds the closed-form amplitudes at the ensemble nodes. The populations
// used for bookkeeping and fragment reductions are band populations: mode k
// carries the excitation of its whole band of W(ξ), so the ensemble sums to
// the continuum totals exactly instead of up to discretisation error.
struct Trajectory {
    TimeGrid grid;
    Complex ce0;
    Eigen::VectorXcd green;           // G(t)
    Eigen::VectorXcd green_dot;       // dG/dt
    Eigen::VectorXcd c_e;
    Eigen::MatrixXcd b;               // modes × times
    Eigen::MatrixXd mode_population;  // p_k(t), modes × times
    Eigen::MatrixXd mode_leaked;      // Γ∫p_k, modes × times
    Eigen::VectorXcd current;         // Σ_k Ω_k e^{-iΔ_k t} b_k(t), continuum limit
    Eigen::VectorXd eta2_P;           // Σ_k p_k
    Eigen::VectorXd Pi_p;
    Eigen::VectorXd eta2_E;           // |c_e(0)|² − |c_e|²
    Eigen::VectorXd gamma_t;          // NaN at singular points
    Eigen::VectorXd s_t;
    std::vector<Index> singular;      // grid indices where G vanishes

    [[nodiscard]] Index modes() const noexcept { return b.rows(); }
    [[nodiscard]] Index size() const noexcept { return grid.size(); }
};

Complex green_function(const PhysicalParams& params, double t);
Complex green_derivative(const PhysicalParams& params, double t);

// Principal root Ω = sqrt(4Ω₀² − (iΔ − Γ₊/2)²).
Complex resolvent_root(const PhysicalParams& params);

// b_k(t) for a mode at detuning Δ_k with coupling Ω_k, scaled by c_e(0).
Complex pseudomode_amplitude(const PhysicalParams& params, double mode_detuning,
                             double mode_coupling, double t);

// c_{kλ}(t)/g_{kλ} for a continuum mode at detuning δ, scaled by c_e(0).
Complex mode_amplitude(const PhysicalParams& params, double mode_detuning, double t);

Trajectory build_trajectory(const PhysicalParams& params, const PseudomodeEnsemble& ensemble,
                            const TimeGrid& grid);

enum class OracleCoupling {
    continuum,  // qubit driven by the continuum memory kernel, nodes driven by the qubit
    discrete,   // closed linear system of qubit + finite ensemble
};

// Fixed-step RK4 integration of the amplitude equations on the grid spacing.
// Populations are node populations |b_k|².
Trajectory ode_oracle(const PhysicalParams& params, const PseudomodeEnsemble& ensemble,
                      const TimeGrid& grid, OracleCoupling coupling = OracleCoupling::continuum);

// Smallest n_steps that satisfies the RK4 step bound for this setup.
Index required_steps(const PhysicalParams& params, const PseudomodeEnsemble& ensemble,
                     double t_max);

// Γ·∫₀ᵗ η²(s) ds with composite Simpson; the last panel of an odd count uses
// a three-point end correction.
Eigen::VectorXd vacuum_population(const Eigen::VectorXd& eta2, double dt, double gamma);

struct DecayRates {
    Eigen::VectorXd gamma;  // NaN where |G|² ≤ singular_threshold
    Eigen::VectorXd shift;
    std::vector<Index> singular;
};

inline constexpr double singular_threshold = 1e-14;

// γ = −2 Re(Ġ/G), s = −2 Im(Ġ/G).
DecayRates decay_rate(const Eigen::VectorXcd& green, const Eigen::VectorXcd& green_dot);
DecayRates decay_rate(const PhysicalParams& params, const TimeGrid& grid);

// Same rates from the pseudomode sum: c_e* Σ_k Ω_k e^{-iΔ_k t} b_k. Uses the
// continuum current of the trajectory.
DecayRates decay_rate_mode_sum(const Trajectory& traj);

// Same, from the node amplitudes of a finite ensemble.
DecayRates decay_rate_node_sum(const Trajectory& traj, const PseudomodeEnsemble& ensemble);

// |d(η²_P)/dt + Γη²_P − γ|c_e|²| with centred differences (one-sided at the
// ends); NaN where γ is singular.
Eigen::VectorXd population_balance_residual(const Trajectory& traj, const PhysicalParams& params);

struct QuasiboundPrediction {
    double value;    // prefactor of e^{-Γt}
    bool in_regime;  // Γ ≤ 0.1 Γ₊
};

QuasiboundPrediction quasibound_prediction(const PhysicalParams& params,
                                           const PseudomodeEnsemble& ensemble);

// tr ρ² of qubit ⊗ pseudomodes.
Eigen::VectorXd purity(const Trajectory& traj, const PhysicalParams& params);

}  // namespace darwinize
