#pragma once

// Brute-force references shared by the unit tests and the acceptance run.

#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "darwinize/dynamics.hpp"

namespace oracle {

using darwinize::Complex;
using darwinize::Index;
using Mat = Eigen::MatrixXcd;

inline double entropy(const Mat& rho) {
    Eigen::SelfAdjointEigenSolver<Mat> es(rho, Eigen::EigenvaluesOnly);
    double s = 0;
    for (Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double l = es.eigenvalues()[i];
        if (l > 1e-300) s -= l * std::log(l);
    }
    return s;
}

// Partial trace of a state on qubits 0..n−1 (bit q of the basis index is
// qubit q), keeping the qubits listed in `keep` in that order.
inline Mat partial_trace(const Mat& rho, int n, const std::vector<int>& keep) {
    const int nk = static_cast<int>(keep.size());
    std::vector<int> drop;
    for (int q = 0; q < n; ++q)
        if (std::find(keep.begin(), keep.end(), q) == keep.end()) drop.push_back(q);
    const int nd = static_cast<int>(drop.size());
    Mat out = Mat::Zero(Index{1} << nk, Index{1} << nk);
    auto compose = [&](int kbits, int dbits) {
        Index idx = 0;
        for (int j = 0; j < nk; ++j)
            if (kbits >> j & 1) idx |= Index{1} << keep[j];
        for (int j = 0; j < nd; ++j)
            if (dbits >> j & 1) idx |= Index{1} << drop[j];
        return idx;
    };
    for (int a = 0; a < (1 << nk); ++a)
        for (int b = 0; b < (1 << nk); ++b)
            for (int d = 0; d < (1 << nd); ++d) out(a, b) += rho(compose(a, d), compose(b, d));
    return out;
}

// Qubit (bit 0, set = excited) and N single-excitation modes (bits 1..N):
// |ψ⟩ = c_g|g,0⟩ + c_e|e,0⟩ + Σ_k a_k|g,1_k⟩, mixed with weight pi on |g,0⟩.
inline Mat explicit_state(Complex cg, Complex ce, const std::vector<Complex>& a, double pi) {
    const int n = static_cast<int>(a.size()) + 1;
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(Index{1} << n);
    psi[0] = cg;
    psi[1] = ce;
    for (std::size_t k = 0; k < a.size(); ++k) psi[Index{1} << (k + 1)] = a[k];
    Mat rho = psi * psi.adjoint();
    rho(0, 0) += pi;
    return rho;
}

// I(S:F) of the explicit state for the fragment of mode indices `frag`.
inline double explicit_qmi(const Mat& rho, int n_modes, const std::vector<Index>& frag) {
    const int n = n_modes + 1;
    std::vector<int> sf{0}, f;
    for (Index k : frag) {
        sf.push_back(static_cast<int>(k) + 1);
        f.push_back(static_cast<int>(k) + 1);
    }
    const double s_s = entropy(partial_trace(rho, n, {0}));
    const double s_f = f.empty() ? 0.0 : entropy(partial_trace(rho, n, f));
    const double s_sf = entropy(partial_trace(rho, n, sf));
    return s_s + s_f - s_sf;
}

// A one-step trajectory carrying the given per-mode populations at t = 1.
inline darwinize::Trajectory synthetic_trajectory(Complex ce0, Complex ce, const Eigen::VectorXd& pop,
                                                  const Eigen::VectorXd& leaked) {
    darwinize::Trajectory tr;
    tr.grid = darwinize::TimeGrid(1.0, 1);
    tr.ce0 = ce0;
    const Index n = pop.size();
    tr.c_e = Eigen::VectorXcd(2);
    tr.c_e << ce0, ce;
    tr.mode_population = Eigen::MatrixXd::Zero(n, 2);
    tr.mode_leaked = Eigen::MatrixXd::Zero(n, 2);
    tr.mode_population.col(1) = pop;
    tr.mode_leaked.col(1) = leaked;
    tr.b = Eigen::MatrixXcd::Zero(n, 2);
    tr.eta2_P = Eigen::Vector2d(0.0, pop.sum());
    tr.Pi_p = Eigen::Vector2d(0.0, leaked.sum());
    tr.eta2_E = Eigen::Vector2d(0.0, pop.sum() + leaked.sum());
    return tr;
}

// Random populations for n modes with |c_e|² = ce2, a fraction `lost` of
// the rest leaked, summing with |c_g|² = cg2 to one.
struct RandomSplit {
    Eigen::VectorXd pop, leaked;
};

inline RandomSplit random_split(std::mt19937_64& rng, Index n, double ce2, double cg2, double lost) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    RandomSplit r{Eigen::VectorXd(n), Eigen::VectorXd(n)};
    for (Index k = 0; k < n; ++k) {
        r.pop[k] = u(rng);
        r.leaked[k] = lost > 0 ? u(rng) : 0.0;
    }
    const double rest = 1.0 - ce2 - cg2;
    const double ps = r.pop.sum(), ls = r.leaked.sum();
    r.pop *= rest * (1 - lost) / ps;
    if (lost > 0) r.leaked *= rest * lost / ls;
    return r;
}

}  // namespace oracle
