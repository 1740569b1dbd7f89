#include "darwinize/model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "darwinize/errors.hpp"

namespace darwinize {

namespace {

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace

void PhysicalParams::validate() const {
    if (!std::isfinite(omega0) || !std::isfinite(coupling) || !std::isfinite(gamma) ||
        !std::isfinite(gamma_w) || !std::isfinite(detuning) || !std::isfinite(deficit) ||
        !finite(ce0) || !finite(cg))
        throw InvalidParameter("non-finite physical parameter");
    if (coupling <= 0.0) throw InvalidParameter("omega_total must be positive");
    if (gamma <= 0.0) throw InvalidParameter("gamma must be positive");
    if (gamma_w < 0.0) throw InvalidParameter("gamma_w must be non-negative");
    const double norm = std::norm(ce0) + std::norm(cg);
    if (std::abs(norm - 1.0) > 1e-12)
        throw InvalidParameter("|ce0|^2 + |cg|^2 = " + std::to_string(norm) + ", expected 1");
    if (!(deficit > 0.0 && deficit < 1.0)) throw InvalidParameter("deficit must lie in (0, 1)");
}

EnsembleScheme parse_scheme(std::string_view name) {
    if (name == "grid") return EnsembleScheme::grid;
    if (name == "quantile") return EnsembleScheme::quantile;
    throw InvalidParameter("unknown ensemble scheme '" + std::string(name) + "'");
}

std::string_view to_string(EnsembleScheme scheme) {
    return scheme == EnsembleScheme::grid ? "grid" : "quantile";
}

double PseudomodeEnsemble::detuning_at(double u) const {
    return center_detuning + half_width * std::tan(u);
}

PseudomodeEnsemble build_ensemble(const PhysicalParams& params, Index count,
                                  EnsembleScheme scheme, double cutoff_halfwidths) {
    params.validate();
    if (count < 1) throw InvalidParameter("n_modes must be at least 1");
    if (!(cutoff_halfwidths > 0.0) || !std::isfinite(cutoff_halfwidths))
        throw InvalidParameter("cutoff must be positive");

    constexpr double half_pi = std::numbers::pi / 2;
    PseudomodeEnsemble ens;
    ens.scheme = scheme;
    ens.center_detuning = -params.detuning;
    ens.half_width = params.gamma_w / 2;
    ens.detunings.resize(count);
    ens.weights.resize(count);

    if (params.gamma_w == 0.0) {
        ens.detunings.setConstant(ens.center_detuning);
        ens.weights.setConstant(1.0 / static_cast<double>(count));
    } else if (count == 1) {
        ens.detunings.setConstant(ens.center_detuning);
        ens.weights.setConstant(1.0);
        ens.band_edges = Eigen::Vector2d(-half_pi, half_pi);
    } else if (scheme == EnsembleScheme::grid) {
        // Uniform nodes in ξ; band edges at the midpoints, outer bands open.
        const double c = cutoff_halfwidths;
        const double step = 2.0 * c / static_cast<double>(count - 1);
        Eigen::VectorXd x(count);  // node positions in half-widths
        for (Index k = 0; k < count; ++k) x[k] = -c + step * static_cast<double>(k);
        x[count - 1] = c;
        for (Index k = 0; k < count; ++k) {
            ens.detunings[k] = ens.center_detuning + ens.half_width * x[k];
            ens.weights[k] = 1.0 / (1.0 + x[k] * x[k]);
        }
        ens.weights /= ens.weights.sum();
        ens.band_edges.resize(count + 1);
        ens.band_edges[0] = -half_pi;
        ens.band_edges[count] = half_pi;
        for (Index k = 1; k < count; ++k)
            ens.band_edges[k] = std::atan(0.5 * (x[k - 1] + x[k]));
    } else {
        // Quantiles of the truncated Lorentzian are uniform in the angle u.
        const double a = std::atan(cutoff_halfwidths);
        const double n = static_cast<double>(count);
        for (Index k = 0; k < count; ++k) {
            const double u = -a + 2.0 * a * (static_cast<double>(k) + 0.5) / n;
            ens.detunings[k] = ens.detuning_at(u);
        }
        ens.weights.setConstant(1.0 / n);
        ens.band_edges.resize(count + 1);
        ens.band_edges[0] = -half_pi;
        ens.band_edges[count] = half_pi;
        for (Index k = 1; k < count; ++k)
            ens.band_edges[k] = -a + 2.0 * a * static_cast<double>(k) / n;
    }
    ens.couplings = params.coupling * ens.weights.cwiseSqrt();
    return ens;
}

double weight_density(const PhysicalParams& params, double detuning) {
    const double hw = params.gamma_w / 2;
    const double x = detuning + params.detuning;
    return hw / (std::numbers::pi * (x * x + hw * hw));
}

Complex memory_kernel(const PhysicalParams& params, double t) {
    if (!(t >= 0.0)) throw DomainError("memory kernel evaluated at negative time");
    const Complex z(-params.gamma_plus() / 2, params.detuning);
    return params.coupling * params.coupling * std::exp(z * t);
}

Complex discrete_kernel(const PseudomodeEnsemble& ensemble, double gamma, double t) {
    Complex sum = 0.0;
    for (Index k = 0; k < ensemble.count(); ++k) {
        const Complex z(-gamma / 2, -ensemble.detunings[k]);
        sum += ensemble.couplings[k] * ensemble.couplings[k] * std::exp(z * t);
    }
    return sum;
}

TimeGrid::TimeGrid(double t_max, Index n_steps) : t_max_(t_max), n_steps_(n_steps) {
    if (!(t_max > 0.0) || !std::isfinite(t_max)) throw InvalidParameter("t_max must be positive");
    if (n_steps < 1) throw InvalidParameter("n_steps must be at least 1");
    times_.resize(n_steps + 1);
    const double h = dt();
    for (Index i = 0; i <= n_steps; ++i) times_[i] = h * static_cast<double>(i);
    times_[n_steps] = t_max;
}

Index TimeGrid::index_of(double t) const {
    const double pos = t / dt();
    const double nearest = std::round(pos);
    if (!(std::abs(pos - nearest) <= 1e-9) || nearest < 0.0 || nearest > static_cast<double>(n_steps_))
        throw DomainError("time " + std::to_string(t) + " is not on the grid");
    return static_cast<Index>(nearest);
}

}  // namespace darwinize
