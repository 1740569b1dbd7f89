#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>

#include "darwinize/infotheory.hpp"

namespace darwinize {

// Projective measurement on the collective fragment qubit with Bloch vector
// (sinθ cosφ, sinθ sinφ, cosθ), σ_z = |1̃⟩⟨1̃| − |0̃⟩⟨0̃|. Outcome 1 projects
// on cos(θ/2)|1̃⟩ + e^{iφ} sin(θ/2)|0̃⟩.
struct MeasurementBasis {
    double theta = 0.0;
    double phi = 0.0;
};

template <class Real>
struct ConditionalOutcome {
    Real probability = 0;
    Density2<Real> state = Density2<Real>::Zero();  // zero when the outcome is dropped
    bool defined = false;
};

inline constexpr double outcome_floor = 1e-14;

template <class Real>
std::array<std::complex<Real>, 2> outcome_vector(MeasurementBasis basis, int j) {
    using C = std::complex<Real>;
    const Real c = std::cos(Real(basis.theta) / 2);
    const Real s = std::sin(Real(basis.theta) / 2);
    const C e = std::polar(Real(1), Real(basis.phi));
    // components on {|0̃⟩, |1̃⟩}
    if (j == 0) return {e * s, C(c)};
    return {C(c), -std::conj(e) * s};
}

// Unnormalised post-measurement qubit state tr_X[(1⊗M_j) ρ (1⊗M_j)].
template <class Real>
Density2<Real> project(const Density4<Real>& rho, MeasurementBasis basis, int j) {
    const auto m = outcome_vector<Real>(basis, j);
    Density2<Real> out;
    for (int s = 0; s < 2; ++s)
        for (int r = 0; r < 2; ++r) {
            std::complex<Real> v = 0;
            for (int x = 0; x < 2; ++x)
                for (int y = 0; y < 2; ++y) v += std::conj(m[x]) * rho(2 * s + x, 2 * r + y) * m[y];
            out(s, r) = v;
        }
    return out;
}

template <class Real>
std::array<ConditionalOutcome<Real>, 2> conditional_states(const Density4<Real>& rho, MeasurementBasis basis) {
    std::array<ConditionalOutcome<Real>, 2> out;
    for (int j = 0; j < 2; ++j) {
        const Density2<Real> sigma = project(rho, basis, j);
        const Real p = sigma(0, 0).real() + sigma(1, 1).real();
        out[j].probability = p;
        if (p >= Real(outcome_floor)) {
            out[j].state = sigma / p;
            out[j].defined = true;
        }
    }
    if (!out[0].defined && !out[1].defined) throw MeasurementDegenerate("both measurement outcomes vanish");
    return out;
}

template <class Real>
Real conditional_entropy(const Density4<Real>& rho, MeasurementBasis basis) {
    // p_j S(σ_j/p_j) from the eigenvalues μ of σ_j itself: rounding in ρ is
    // absolute, so positivity is judged before dividing by a small p_j.
    const auto outcomes = conditional_states(rho, basis);
    Real s = 0;
    for (int j = 0; j < 2; ++j) {
        if (!outcomes[j].defined) continue;
        const Density2<Real> sigma = project(rho, basis, j);
        auto [lo, hi] = eigenvalues2(sigma(0, 0).real(), sigma(1, 1).real(), sigma(0, 1));
        if (lo < -Real(eigen_reject)) throw NotAState("negative eigenvalue " + std::to_string(double(lo)));
        lo = std::max(lo, Real(0));
        const Real p = lo + hi;
        if (lo > Real(0)) s -= lo * std::log(lo / p);
        if (hi > Real(0)) s -= hi * std::log(hi / p);
    }
    return s;
}

// Closed-form outcome coefficients for a c_g = 0 state with fragment
// excitation eta2_f and |g,0̃⟩ weight pi_f; j ∈ {1, 2}.
struct OutcomeCoefficients {
    double A = 0.0;  // ⟨g|·|g⟩
    double C = 0.0;  // ⟨e|·|e⟩
    Complex B;       // ⟨e|·|g⟩
    double p = 0.0;
};

inline OutcomeCoefficients outcome_coefficients(double eta2_f, double pi_f, Complex c_e,
                                                MeasurementBasis basis, int j) {
    const double sign = j == 1 ? 1.0 : -1.0;
    const double ct = std::cos(basis.theta);
    const double ce2 = std::norm(c_e);
    OutcomeCoefficients r;
    r.A = 0.5 * (pi_f + eta2_f + sign * ct * (eta2_f - pi_f));
    r.B = 0.5 * sign * std::sin(basis.theta) * std::polar(1.0, -basis.phi) * std::sqrt(eta2_f) * c_e;
    r.C = 0.5 * ce2 * (1.0 - sign * ct);
    const double sz = ce2 - (pi_f + eta2_f);
    r.p = 0.5 * (1.0 - sign * ct * (sz + 2.0 * pi_f));
    return r;
}

struct CorrelationSplit {
    double qmi = 0.0;
    double holevo_J = 0.0;
    double discord = 0.0;
    double argmin_theta = 0.0;
    double argmin_phi = 0.0;
    double s_cond = 0.0;
};

namespace detail {

inline constexpr int theta_scan = 181;
inline constexpr int phi_scan = 36;
inline constexpr double angle_tol = 1e-6;

template <class F>
double golden_min(F&& f, double lo, double hi, double& fmin) {
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double x1 = b - r * (b - a), x2 = a + r * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > angle_tol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    if (f1 <= f2) {
        fmin = f1;
        return x1;
    }
    fmin = f2;
    return x2;
}

inline double wrap(double x, double period) {
    x = std::fmod(x, period);
    return x < 0.0 ? x + period : x;
}

// The conditional entropy only depends on φ through coherences that involve
// |g,0̃⟩ or |e,1̃⟩ (c_g ≠ 0).
template <class Real>
bool phi_invariant(const Density4<Real>& rho) {
    return std::abs(rho(0, 1)) + std::abs(rho(0, 3)) + std::abs(rho(1, 3)) + std::abs(rho(2, 3)) +
               std::min(std::abs(rho(0, 2)), std::abs(rho(1, 2))) ==
           Real(0);
}

}  // namespace detail

// Minimises the conditional entropy over the measurement angles: a uniform
// scan of θ ∈ [0, π] followed by golden-section refinement. States whose
// conditional entropy depends on φ get a θ × φ scan and alternating
// refinements instead.
template <class Real>
CorrelationSplit correlation_split(const Density4<Real>& rho) {
    using detail::golden_min;
    constexpr double pi = std::numbers::pi;
    CorrelationSplit out;
    out.qmi = double(qmi(rho));
    const double s_sys = double(entropy2(system_marginal(rho)));
    auto cond = [&](double theta, double phi) { return double(conditional_entropy(rho, {theta, phi})); };

    const double step = pi / (detail::theta_scan - 1);
    double best = 0.0, theta = 0.0, phi = 0.0;
    if (detail::phi_invariant(rho)) {
        int arg = 0;
        for (int k = 0; k < detail::theta_scan; ++k) {
            const double v = cond(step * k, 0.0);
            if (k == 0 || v < best) {
                best = v;
                arg = k;
            }
        }
        double refined;
        const double th = golden_min([&](double x) { return cond(x, 0.0); }, step * (arg - 1), step * (arg + 1),
                                     refined);
        theta = step * arg;
        if (refined < best) {
            best = refined;
            theta = th;
        }
    } else {
        const double pstep = 2.0 * pi / detail::phi_scan;
        for (int k = 0; k < detail::theta_scan; ++k)
            for (int l = 0; l < detail::phi_scan; ++l) {
                const double v = cond(step * k, pstep * l);
                if ((k == 0 && l == 0) || v < best) {
                    best = v;
                    theta = step * k;
                    phi = pstep * l;
                }
            }
        double tw = step, pw = pstep;
        for (int round = 0; round < 6; ++round) {
            double v;
            const double th = golden_min([&](double x) { return cond(x, phi); }, theta - tw, theta + tw, v);
            if (v < best) {
                best = v;
                theta = th;
            }
            const double ph = golden_min([&](double x) { return cond(theta, x); }, phi - pw, phi + pw, v);
            if (v < best) {
                best = v;
                phi = ph;
            }
            tw *= 0.25;
            pw *= 0.25;
        }
    }
    out.s_cond = best;
    out.argmin_theta = detail::wrap(theta, pi);
    if (out.argmin_theta >= pi) out.argmin_theta = 0.0;
    out.argmin_phi = detail::wrap(phi, 2.0 * pi);
    out.holevo_J = s_sys - best;
    out.discord = out.qmi - out.holevo_J;
    return out;
}

inline CorrelationSplit correlation_split(const SystemFragmentState& state) { return correlation_split(state.rho); }

}  // namespace darwinize
