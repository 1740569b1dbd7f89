#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "darwinize/dynamics.hpp"
#include "darwinize/errors.hpp"

namespace darwinize {

template <class Real>
using Density2 = Eigen::Matrix<std::complex<Real>, 2, 2>;

// Qubit ⊗ collective fragment qubit in the ordered basis
// {|g,0̃⟩, |g,1̃⟩, |e,0̃⟩, |e,1̃⟩}.
template <class Real>
using Density4 = Eigen::Matrix<std::complex<Real>, 4, 4>;

enum class FragmentKind {
    subenvironments,  // case (i): E_f
    pseudomodes,      // case (ii): P_f
};

FragmentKind parse_kind(std::string_view name);
std::string_view to_string(FragmentKind kind);

struct FragmentSpec {
    std::vector<Index> indices;  // sorted, unique
    FragmentKind kind = FragmentKind::subenvironments;
    double fraction = 0.0;       // |indices| / #E
};

// Validates and sorts `indices`; throws InvalidParameter on out-of-range or
// repeated entries.
FragmentSpec make_fragment(std::vector<Index> indices, Index total, FragmentKind kind);

struct SystemFragmentState {
    Density4<double> rho;
    FragmentSpec fragment;
    double t = 0.0;
    double eta2_f = 0.0;  // excitation inside the fragment, η²_{X_f}
    double pi_f = 0.0;    // remaining |g⟩-sector weight Π_{X_f}
};

// Collective-qubit state for a fragment carrying excitation eta2_f. The
// |g,0̃⟩ weight closes the trace, so it holds |c_g|², everything outside the
// fragment and (case ii) the pseudomode vacuum population.
template <class Real>
Density4<Real> collective_state(Real eta2_f, std::complex<Real> c_e, std::complex<Real> c_g) {
    using C = std::complex<Real>;
    const Real eta = std::sqrt(std::max(eta2_f, Real(0)));
    Density4<Real> rho = Density4<Real>::Zero();
    rho(0, 0) = C(Real(1) - eta2_f - std::norm(c_e));
    rho(1, 1) = C(eta2_f);
    rho(2, 2) = C(std::norm(c_e));
    rho(1, 2) = eta * std::conj(c_e);
    rho(2, 1) = std::conj(rho(1, 2));
    rho(0, 1) = c_g * eta;
    rho(1, 0) = std::conj(rho(0, 1));
    rho(0, 2) = c_g * std::conj(c_e);
    rho(2, 0) = std::conj(rho(0, 2));
    return rho;
}

// Excitation held by each mode at time index i: p_k + Γ∫p_k for
// sub-environments (pseudomode plus its own reservoir), p_k for pseudomodes.
Eigen::VectorXd fragment_populations(const Trajectory& traj, FragmentKind kind, Index i);

SystemFragmentState reduce_subenv(const Trajectory& traj, const PhysicalParams& params,
                                  const FragmentSpec& fragment, double t);
SystemFragmentState reduce_pseudo(const Trajectory& traj, const PhysicalParams& params,
                                  const FragmentSpec& fragment, double t);
SystemFragmentState reduce(const Trajectory& traj, const PhysicalParams& params,
                           const FragmentSpec& fragment, double t);

inline constexpr double eigen_clamp = 1e-10;
inline constexpr double eigen_reject = 1e-8;

template <class Real>
Real entropy_term(Real lambda) {
    if (lambda < -Real(eigen_reject)) throw NotAState("negative eigenvalue " + std::to_string(double(lambda)));
    return lambda > Real(0) ? -lambda * std::log(lambda) : Real(0);
}

// Eigenvalues of a 2×2 Hermitian matrix; the small one from the determinant
// so near-pure states keep their relative precision.
template <class Real>
std::pair<Real, Real> eigenvalues2(Real a, Real d, std::complex<Real> b) {
    const Real half_diff = (a - d) / 2;
    const Real r = std::hypot(half_diff, std::abs(b));
    const Real mean = (a + d) / 2;
    const Real hi = mean + r;
    const Real det = a * d - std::norm(b);
    const Real lo = hi > Real(0) ? det / hi : mean - r;
    return {lo, hi};
}

template <class Real>
Real entropy2(const Density2<Real>& rho) {
    const auto [lo, hi] = eigenvalues2(rho(0, 0).real(), rho(1, 1).real(), rho(0, 1));
    return entropy_term(lo) + entropy_term(hi);
}

// −Σλ ln λ of a Hermitian matrix.
template <class Derived>
typename Derived::RealScalar von_neumann_entropy(const Eigen::MatrixBase<Derived>& rho) {
    using Real = typename Derived::RealScalar;
    if (rho.rows() == 2 && rho.cols() == 2) {
        const auto [lo, hi] = eigenvalues2<Real>(std::real(rho(0, 0)), std::real(rho(1, 1)), rho(0, 1));
        return entropy_term(lo) + entropy_term(hi);
    }
    using Plain = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    Eigen::SelfAdjointEigenSolver<Plain> solver(Plain(rho), Eigen::EigenvaluesOnly);
    Real s = 0;
    for (Index i = 0; i < solver.eigenvalues().size(); ++i) s += entropy_term(solver.eigenvalues()[i]);
    return s;
}

template <class Real>
Density2<Real> system_marginal(const Density4<Real>& rho) {
    Density2<Real> out;
    out(0, 0) = rho(0, 0) + rho(1, 1);
    out(1, 1) = rho(2, 2) + rho(3, 3);
    out(0, 1) = rho(0, 2) + rho(1, 3);
    out(1, 0) = std::conj(out(0, 1));
    return out;
}

template <class Real>
Density2<Real> fragment_marginal(const Density4<Real>& rho) {
    Density2<Real> out;
    out(0, 0) = rho(0, 0) + rho(2, 2);
    out(1, 1) = rho(1, 1) + rho(3, 3);
    out(0, 1) = rho(0, 1) + rho(2, 3);
    out(1, 0) = std::conj(out(0, 1));
    return out;
}

// Joint entropy. Without |g⟩–|e⟩ or vacuum coherences with |g,0̃⟩ the state is
// block diagonal 1 ⊕ 2 ⊕ 1 and the 2×2 block is solved in closed form.
template <class Real>
Real joint_entropy(const Density4<Real>& rho) {
    const Real off = std::abs(rho(0, 1)) + std::abs(rho(0, 2)) + std::abs(rho(0, 3)) +
                     std::abs(rho(1, 3)) + std::abs(rho(2, 3));
    if (off == Real(0)) {
        const auto [lo, hi] = eigenvalues2(rho(1, 1).real(), rho(2, 2).real(), rho(1, 2));
        return entropy_term(rho(0, 0).real()) + entropy_term(rho(3, 3).real()) + entropy_term(lo) +
               entropy_term(hi);
    }
    return von_neumann_entropy(rho);
}

template <class Real>
Real qmi(const Density4<Real>& rho) {
    const Real i = entropy2(system_marginal(rho)) + entropy2(fragment_marginal(rho)) - joint_entropy(rho);
    if (i < -Real(1e-9)) throw NotAState("negative mutual information " + std::to_string(double(i)));
    return std::max(i, Real(0));
}

inline double qmi(const SystemFragmentState& state) { return qmi(state.rho); }

// h(x) = −x ln x − (1−x) ln(1−x); arguments outside [0,1] by more than
// 1e-12 throw DomainError.
double binary_entropy(double x);

// Partial information under the uniform-fraction approximation, c_g = 0.
double analytic_partial_info_E(double f, double abs_ce2, double eta2_E);
double analytic_partial_info_P(double f, double abs_ce2, double eta2_P, double Pi_p);

}  // namespace darwinize
