#pragma once

#include <complex>
#include <cstdint>
#include <string_view>

#include <Eigen/Dense>

namespace darwinize {

using Index = Eigen::Index;
using Complex = std::complex<double>;

// Continuous-model parameters. All rates share one (arbitrary) unit of
// inverse time; the analysis usually measures them in units of the total
// coupling.
struct PhysicalParams {
    double omega0 = 0.0;     // qubit splitting; only detunings enter the rotating-frame dynamics
    double coupling = 1.0;   // total coupling Ω₀, Ω₀² = Σ_k Ω_k²
    double gamma = 1e-3;     // width Γ of every pseudomode Lorentzian
    double gamma_w = 0.999;  // width Γ_W of the pseudomode weight distribution W(ξ)
    double detuning = 0.0;   // Δ: W is centred on ω₀ − Δ
    Complex ce0{1.0, 0.0};   // initial excited amplitude c_e(0)
    Complex cg{0.0, 0.0};    // ground amplitude c_g
    double deficit = 0.15;   // information deficit δ

    [[nodiscard]] double gamma_plus() const noexcept { return gamma + gamma_w; }

    // Throws InvalidParameter on non-finite values or broken invariants.
    void validate() const;
};

enum class EnsembleScheme { grid, quantile };

EnsembleScheme parse_scheme(std::string_view name);
std::string_view to_string(EnsembleScheme scheme);

// Discretised pseudomode distribution.
//
// Mode k sits at detuning Δ_k = ξ_k − ω₀ with weight w_k and coupling
// Ω_k = Ω₀√w_k. Besides the nodes, each mode owns a band of the continuous
// distribution W(ξ); the bands tile the real line and are stored as edges in
// the angle variable u = atan((ξ − ξ_c)/(Γ_W/2)) ∈ [−π/2, π/2], in which W
// becomes the flat density 1/π.
struct PseudomodeEnsemble {
    EnsembleScheme scheme = EnsembleScheme::grid;
    double center_detuning = 0.0;  // ξ_c − ω₀ = −Δ
    double half_width = 0.0;       // Γ_W / 2; zero for the delta-distribution limit
    Eigen::VectorXd detunings;
    Eigen::VectorXd weights;
    Eigen::VectorXd couplings;
    Eigen::VectorXd band_edges;    // count+1 angles; empty when half_width == 0

    [[nodiscard]] Index count() const noexcept { return detunings.size(); }
    [[nodiscard]] bool degenerate() const noexcept { return band_edges.size() == 0; }

    // Detuning at band angle u.
    [[nodiscard]] double detuning_at(double u) const;
};

PseudomodeEnsemble build_ensemble(const PhysicalParams& params, Index count,
                                  EnsembleScheme scheme = EnsembleScheme::grid,
                                  double cutoff_halfwidths = 20.0);

// Lorentzian pseudomode density W(ξ), evaluated at detuning ξ − ω₀.
double weight_density(const PhysicalParams& params, double detuning);

// f(t) = Ω₀² exp[(iΔ − Γ₊/2) t], the continuum memory kernel.
Complex memory_kernel(const PhysicalParams& params, double t);

// Σ_k Ω_k² exp[(−iΔ_k − Γ/2) t], the kernel a finite ensemble produces.
Complex discrete_kernel(const PseudomodeEnsemble& ensemble, double gamma, double t);

// Uniform time samples 0, dt, ..., t_max (n_steps + 1 points).
class TimeGrid {
public:
    TimeGrid() = default;
    TimeGrid(double t_max, Index n_steps);

    [[nodiscard]] double t_max() const noexcept { return t_max_; }
    [[nodiscard]] Index n_steps() const noexcept { return n_steps_; }
    [[nodiscard]] Index size() const noexcept { return times_.size(); }
    [[nodiscard]] double dt() const noexcept { return t_max_ / static_cast<double>(n_steps_); }
    [[nodiscard]] double operator[](Index i) const { return times_[i]; }
    [[nodiscard]] const Eigen::VectorXd& times() const noexcept { return times_; }

    // Grid index of time t; throws DomainError if t is not on the grid.
    [[nodiscard]] Index index_of(double t) const;

private:
    double t_max_ = 0.0;
    Index n_steps_ = 0;
    Eigen::VectorXd times_;
};

}  // namespace darwinize
