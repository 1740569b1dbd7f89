#include "darwinize/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "darwinize/errors.hpp"

namespace darwinize {

namespace {

constexpr Complex I{0.0, 1.0};
constexpr double nan = std::numeric_limits<double>::quiet_NaN();

struct Pole {
    Complex z;       // iΔ − Γ₊/2
    Complex omega2;  // 4Ω₀² − z²
    Complex omega;
};

Pole make_pole(const PhysicalParams& p) {
    Pole q;
    q.z = Complex(-p.gamma_plus() / 2, p.detuning);
    q.omega2 = 4.0 * p.coupling * p.coupling - q.z * q.z;
    q.omega = std::sqrt(q.omega2);
    return q;
}

Complex sinc(Complex x) {
    if (std::abs(x) < 1e-4) {
        const Complex x2 = x * x;
        return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
    }
    return std::sin(x) / x;
}

// e^{zt/2} cos(Ωt/2) and e^{zt/2} sin(Ωt/2)/Ω. Both are even in Ω, so the
// branch of the root never matters.
struct Factors {
    Complex ec;
    Complex es;
};

Factors factors(const Pole& q, double t) {
    const Complex x = 0.5 * q.omega * t;
    if (std::abs(x.imag()) < 20.0) {
        const Complex e = std::exp(0.5 * q.z * t);
        return {e * std::cos(x), e * (0.5 * t) * sinc(x)};
    }
    // cos and sin would overflow on their own; fold the growth into the decay.
    const Complex ep = std::exp(0.5 * q.z * t + I * x);
    const Complex em = std::exp(0.5 * q.z * t - I * x);
    return {0.5 * (ep + em), (ep - em) / (2.0 * I * q.omega)};
}

// Closed-form amplitude per unit coupling and unit c_e(0):
//   β(ξ,t) = −4/den · [X e^{−γ_s t/2} − e^{iξt} (q₁ξ + q₀)]
// γ_s is the static damping and γ_w the width entering X; the pseudomode
// amplitude uses (Γ, Γ_W), the continuum mode amplitude (0, Γ₊).
struct Shape {
    Pole pole;
    double delta;
    double gs;
    double gw;
    double scale;  // Ω₀², for the degeneracy test

    Complex X(double xi) const { return {xi + delta, gw / 2}; }
    Complex den(double xi) const {
        const Complex a((gs - gw) / 2, 2.0 * xi + delta);
        return a * a + pole.omega2;
    }
    Complex q1(const Factors& f) const { return f.ec - pole.z * f.es; }
    Complex q0(const Factors& f) const {
        return Complex(delta, gw / 2) * f.ec - pole.z * Complex(delta / 2, -(gs - gw) / 4) * f.es -
               0.5 * I * pole.omega2 * f.es;
    }
    Complex checked_den(double xi) const {
        const Complex d = den(xi);
        if (std::abs(d) < 1e-12 * scale)
            throw DegenerateParameter("resonance denominator vanishes at detuning " +
                                      std::to_string(xi) + "; perturb the mode detuning");
        return d;
    }
    Complex beta(double xi, double t, const Factors& f) const {
        const Complex d = checked_den(xi);
        return -4.0 / d * (X(xi) * std::exp(-gs * t / 2) - std::polar(1.0, xi * t) * (q1(f) * xi + q0(f)));
    }
};

Shape pseudomode_shape(const PhysicalParams& p) {
    return {make_pole(p), p.detuning, p.gamma, p.gamma_w, p.coupling * p.coupling};
}

Shape continuum_shape(const PhysicalParams& p) {
    return {make_pole(p), p.detuning, 0.0, p.gamma_plus(), p.coupling * p.coupling};
}

void require_time(double t) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("time must be finite and non-negative");
}

// ---------------------------------------------------------------------------
// Band populations.
//
// With Q = q₁ξ + q₀ the band population per unit Ω₀²|c_e(0)|² is
//   p = e^{−Γt} M_X + |q₁|² M₂ + 2Re(q₁q̄₀) M₁ + |q₀|² M₀ − 2e^{−Γt/2} Re(q₁F₁ + q₀F₀)
// with t-independent moments M_X = ∫W·16|X|²/|den|², M_j = ∫W·16ξʲ/|den|²
// and the Fourier integrals F_j(t) = ∫W·16 X̄ ξʲ e^{iξt}/|den|².
//
// The leaked population Γ∫p is integrated in time with a three-point Gauss
// rule per grid step: the moment part through four mode-independent scalar
// integrals, the Fourier part node by node alongside F_j. A grid that barely
// resolves 1/Γ₊ would otherwise leave a Simpson error above the bookkeeping
// tolerance.

struct BandMoments {
    double mx = 0, m0 = 0, m1 = 0, m2 = 0;
};

constexpr double fourier_tol = 1e-11;
constexpr int time_nodes = 3;

// Mode-independent time data: factors at grid points and, per step, the Gauss
// sub-points with weights ω·h·e^{−Γs/2}·q_j(s) folded in.
struct TimeData {
    std::vector<Factors> at;
    std::vector<std::array<double, time_nodes>> offset;  // s − t_i
    std::vector<std::array<Complex, time_nodes>> a1, a0;
    Eigen::VectorXd ix, i11, i10, i00;                   // cumulative ∫e^{−Γs}, ∫|q₁|², ∫Re(q₁q̄₀), ∫|q₀|²
    std::vector<std::array<double, time_nodes>> s;       // absolute sub-times
};

TimeData make_time_data(const Shape& shape, const TimeGrid& grid) {
    using Rule = boost::math::quadrature::gauss<double, time_nodes>;
    const Index nt = grid.size();
    TimeData d;
    d.at.resize(static_cast<std::size_t>(nt));
    for (Index i = 0; i < nt; ++i) d.at[static_cast<std::size_t>(i)] = factors(shape.pole, grid[i]);
    const std::size_t steps = static_cast<std::size_t>(std::max<Index>(nt - 1, 0));
    d.offset.resize(steps);
    d.s.resize(steps);
    d.a1.resize(steps);
    d.a0.resize(steps);
    d.ix = Eigen::VectorXd::Zero(nt);
    d.i11 = d.i10 = d.i00 = d.ix;

    // Gauss abscissae on [−1, 1] in ascending order with matching weights.
    std::array<double, time_nodes> x{}, w{};
    {
        const auto& ab = Rule::abscissa();
        const auto& wt = Rule::weights();
        std::size_t j = 0;
        for (std::size_t n = ab.size(); n-- > 0;) {
            if (ab[n] == 0.0) continue;
            x[j] = -ab[n];
            w[j++] = wt[n];
        }
        for (std::size_t n = 0; n < ab.size(); ++n) {
            x[j] = ab[n];
            w[j++] = wt[n];
        }
    }
    for (std::size_t i = 0; i < steps; ++i) {
        const double t0 = grid[static_cast<Index>(i)];
        const double h = grid[static_cast<Index>(i) + 1] - t0;
        double sx = 0, s11 = 0, s10 = 0, s00 = 0;
        for (int m = 0; m < time_nodes; ++m) {
            const double off = 0.5 * h * (1.0 + x[m]);
            const double sm = t0 + off;
            const double wm = 0.5 * h * w[m];
            const Factors f = factors(shape.pole, sm);
            const Complex q1 = shape.q1(f);
            const Complex q0 = shape.q0(f);
            const double damp = std::exp(-shape.gs * sm / 2);
            d.offset[i][m] = off;
            d.s[i][m] = sm;
            d.a1[i][m] = wm * damp * q1;
            d.a0[i][m] = wm * damp * q0;
            sx += wm * damp * damp;
            s11 += wm * std::norm(q1);
            s10 += wm * (q1 * std::conj(q0)).real();
            s00 += wm * std::norm(q0);
        }
        d.ix[static_cast<Index>(i) + 1] = d.ix[static_cast<Index>(i)] + sx;
        d.i11[static_cast<Index>(i) + 1] = d.i11[static_cast<Index>(i)] + s11;
        d.i10[static_cast<Index>(i) + 1] = d.i10[static_cast<Index>(i)] + s10;
        d.i00[static_cast<Index>(i) + 1] = d.i00[static_cast<Index>(i)] + s00;
    }
    return d;
}

struct FourierSums {
    Eigen::VectorXcd f0, f1;  // at grid times
    Eigen::VectorXcd step;    // per step: Σ_m a₁F₁(s_m) + a₀F₀(s_m)
};

class BandQuadrature {
public:
    BandQuadrature(const PhysicalParams& params, const PseudomodeEnsemble& ens, const TimeGrid& grid,
                   const TimeData& time)
        : shape_(pseudomode_shape(params)), ens_(ens), grid_(grid), time_(time) {
        const double hw = ens.half_width;
        const double s = std::max({hw, params.gamma_plus(), params.coupling, std::abs(params.detuning),
                                   std::abs(shape_.pole.omega)});
        double edge = 0.0;
        for (Index k = 1; k < ens.count(); ++k)
            edge = std::max(edge, std::abs(ens.detuning_at(ens.band_edges[k]) - ens.center_detuning));

        // Above t_c the tails beyond L₁ come from two integration-by-parts
        // terms, whose remainder ~ 20Ω₀²hw/(πL⁶t³) must stay below the
        // tolerance. Below t_c the tails are integrated out to L₂, beyond
        // which the integrand bound 2Ω₀²hw/(3πL³) is negligible.
        const double w2 = params.coupling * params.coupling;
        t_c_ = std::min(grid.t_max(), 1.0 / params.coupling);
        const double l_ibp =
            std::pow(20.0 * w2 * hw / (std::numbers::pi * fourier_tol * std::pow(t_c_, 3)), 1.0 / 6.0);
        l1_ = std::max({20.0 * s, 1.01 * edge, l_ibp});
        l2_ = std::max(l1_, std::cbrt(2.0 * w2 * hw / (3.0 * std::numbers::pi * fourier_tol)));
        i_c_ = t_c_ >= grid.t_max()
                   ? grid.size() - 1
                   : std::min<Index>(grid.size() - 1, static_cast<Index>(std::floor(t_c_ / grid.dt() + 1e-9)));
    }

    // h(ξ) = W·16·X̄/|den|² with ξ measured as detuning.
    Complex h(double xi) const {
        const double hw = ens_.half_width;
        const double x = xi - ens_.center_detuning;
        const double w = hw / (std::numbers::pi * (x * x + hw * hw));
        const Complex d = shape_.checked_den(xi);
        return w * 16.0 * std::conj(shape_.X(xi)) / std::norm(d);
    }

    BandMoments moments(Index k) const {
        using boost::math::quadrature::gauss_kronrod;
        const double lo = ens_.band_edges[k];
        const double hi = ens_.band_edges[k + 1];
        auto integrate = [&](auto&& f) {
            return gauss_kronrod<double, 31>::integrate(f, lo, hi, 12, 1e-12) / std::numbers::pi;
        };
        BandMoments m;
        m.mx = integrate([&](double u) {
            const double xi = ens_.detuning_at(u);
            return 16.0 * std::norm(shape_.X(xi)) / std::norm(shape_.checked_den(xi));
        });
        m.m0 = integrate([&](double u) { return 16.0 / std::norm(shape_.checked_den(ens_.detuning_at(u))); });
        m.m1 = integrate([&](double u) {
            const double xi = ens_.detuning_at(u);
            return 16.0 * xi / std::norm(shape_.checked_den(xi));
        });
        m.m2 = integrate([&](double u) {
            const double xi = ens_.detuning_at(u);
            return 16.0 * xi * xi / std::norm(shape_.checked_den(xi));
        });
        return m;
    }

    FourierSums fourier(Index k) const {
        const Index nt = grid_.size();
        FourierSums out;
        out.f0 = Eigen::VectorXcd::Zero(nt);
        out.f1 = Eigen::VectorXcd::Zero(nt);
        out.step = Eigen::VectorXcd::Zero(std::max<Index>(nt - 1, 0));
        const double c = ens_.center_detuning;
        const bool open_lo = k == 0;
        const bool open_hi = k == ens_.count() - 1;
        const double a = open_lo ? c - l1_ : ens_.detuning_at(ens_.band_edges[k]);
        const double b = open_hi ? c + l1_ : ens_.detuning_at(ens_.band_edges[k + 1]);
        accumulate(a, b, grid_.t_max(), nt - 1, out);
        if (open_hi) {
            if (l2_ > l1_) accumulate(c + l1_, c + l2_, t_c_, i_c_, out);
            tail(c + l1_, +1.0, out);
        }
        if (open_lo) {
            if (l2_ > l1_) accumulate(c - l2_, c - l1_, t_c_, i_c_, out);
            tail(c - l1_, -1.0, out);
        }
        return out;
    }

private:
    using Rule = boost::math::quadrature::gauss<double, 10>;

    // Adds ∫_a^b h e^{iξt} (and ξ·h) for time indices 0..i_max. Panels start
    // one oscillation wide at t_ref and are bisected until the rule agrees
    // with itself at t = 0 and t = t_ref.
    void accumulate(double a, double b, double t_ref, Index i_max, FourierSums& out) const {
        if (!(b > a)) return;
        const double width = 2.0 * std::numbers::pi / std::max(t_ref, 1e-300);
        const Index panels = std::max<Index>(1, static_cast<Index>(std::ceil((b - a) / width)));
        const double step = (b - a) / static_cast<double>(panels);
        for (Index j = 0; j < panels; ++j) {
            const double lo = a + step * static_cast<double>(j);
            const double hi = j + 1 == panels ? b : lo + step;
            panel(lo, hi, t_ref, i_max, 0, out);
        }
    }

    // Rule estimate of ∫h e^{iξt}; `mass` receives ∫|h| for the tolerance.
    Complex rule(double lo, double hi, double t, double* mass = nullptr) const {
        const double mid = 0.5 * (lo + hi);
        const double half = 0.5 * (hi - lo);
        Complex sum = 0.0;
        double abs_sum = 0.0;
        const auto& x = Rule::abscissa();
        const auto& w = Rule::weights();
        for (std::size_t n = 0; n < x.size(); ++n) {
            for (int sgn : {-1, 1}) {
                if (n == 0 && sgn == 1 && x[0] == 0.0) continue;
                const double xi = mid + sgn * half * x[n];
                const Complex v = h(xi);
                sum += w[n] * v * std::polar(1.0, xi * t);
                abs_sum += w[n] * std::abs(v);
            }
        }
        if (mass) *mass = half * abs_sum;
        return half * sum;
    }

    void panel(double lo, double hi, double t_probe, Index i_max, int depth, FourierSums& out) const {
        const double mid = 0.5 * (lo + hi);
        double mass = 0.0;
        const Complex c0 = rule(lo, hi, 0.0, &mass);
        const Complex f0 = rule(lo, mid, 0.0) + rule(mid, hi, 0.0);
        const Complex c1 = rule(lo, hi, t_probe);
        const Complex f1 = rule(lo, mid, t_probe) + rule(mid, hi, t_probe);
        const double tol = 1e-12 * mass;
        if ((std::abs(c0 - f0) > tol || std::abs(c1 - f1) > tol) && depth < 16) {
            panel(lo, mid, t_probe, i_max, depth + 1, out);
            panel(mid, hi, t_probe, i_max, depth + 1, out);
            return;
        }
        add_nodes(lo, mid, i_max, out);
        add_nodes(mid, hi, i_max, out);
    }

    void add_nodes(double lo, double hi, Index i_max, FourierSums& out) const {
        const double mid = 0.5 * (lo + hi);
        const double half = 0.5 * (hi - lo);
        const auto& x = Rule::abscissa();
        const auto& w = Rule::weights();
        const double dt = grid_.dt();
        for (std::size_t n = 0; n < x.size(); ++n) {
            for (int sgn : {-1, 1}) {
                if (n == 0 && sgn == 1 && x[0] == 0.0) continue;
                const double xi = mid + sgn * half * x[n];
                const Complex wh = half * w[n] * h(xi);
                const Complex wxh = wh * xi;
                const Complex turn = std::polar(1.0, xi * dt);
                std::array<Complex, time_nodes> phase;
                for (int m = 0; m < time_nodes; ++m) phase[m] = std::polar(1.0, xi * time_.offset[0][m]);
                Complex rot = 1.0;
                for (Index i = 0; i <= i_max; ++i) {
                    out.f0[i] += wh * rot;
                    out.f1[i] += wxh * rot;
                    if (i < i_max) {
                        const auto& a1 = time_.a1[static_cast<std::size_t>(i)];
                        const auto& a0 = time_.a0[static_cast<std::size_t>(i)];
                        Complex e = 0.0;
                        for (int m = 0; m < time_nodes; ++m) e += phase[m] * (xi * a1[m] + a0[m]);
                        out.step[i] += wh * rot * e;
                    }
                    rot *= turn;
                }
            }
        }
    }

    // ∫ beyond L of g e^{iξt}: e^{iLt}[∓g(L)/(it) ± g'(L)/(it)²], upper sign
    // for the tail towards +∞.
    void tail(double l, double dir, FourierSums& out) const {
        const double d = 1e-3 * std::abs(l - ens_.center_detuning);
        const Complex g0 = h(l);
        const Complex g0p = (h(l + d) - h(l - d)) / (2.0 * d);
        const Complex g1 = l * g0;
        const Complex g1p = g0 + l * g0p;
        auto at = [&](double t, Complex& f0, Complex& f1) {
            const Complex it = I * t;
            const Complex e = std::polar(1.0, l * t);
            f0 = dir * e * (-g0 / it + g0p / (it * it));
            f1 = dir * e * (-g1 / it + g1p / (it * it));
        };
        for (Index i = i_c_ + 1; i < grid_.size(); ++i) {
            Complex f0, f1;
            at(grid_[i], f0, f1);
            out.f0[i] += f0;
            out.f1[i] += f1;
        }
        for (Index i = i_c_; i + 1 < grid_.size(); ++i) {
            const std::size_t j = static_cast<std::size_t>(i);
            for (int m = 0; m < time_nodes; ++m) {
                Complex f0, f1;
                at(time_.s[j][m], f0, f1);
                out.step[i] += time_.a1[j][m] * f1 + time_.a0[j][m] * f0;
            }
        }
    }

    Shape shape_;
    const PseudomodeEnsemble& ens_;
    const TimeGrid& grid_;
    const TimeData& time_;
    double t_c_ = 0.0;
    double l1_ = 0.0;
    double l2_ = 0.0;
    Index i_c_ = 0;
};

void fill_band_populations(const PhysicalParams& params, const PseudomodeEnsemble& ens,
                           const TimeGrid& grid, Trajectory& traj) {
    const Index n = ens.count();
    const Index nt = grid.size();
    const Shape shape = pseudomode_shape(params);
    const double scale = params.coupling * params.coupling * std::norm(params.ce0);
    const double gamma = params.gamma;
    traj.mode_population.resize(n, nt);
    traj.mode_leaked.resize(n, nt);
    const TimeData time = make_time_data(shape, grid);

    if (ens.degenerate()) {
        const double xi = ens.center_detuning;
        Eigen::VectorXd pop(nt), leak = Eigen::VectorXd::Zero(nt);
        for (Index i = 0; i < nt; ++i) {
            pop[i] = std::norm(shape.beta(xi, grid[i], time.at[static_cast<std::size_t>(i)]));
            if (i + 1 < nt) {
                double sum = 0.0;
                for (int m = 0; m < time_nodes; ++m) {
                    const double sm = time.s[static_cast<std::size_t>(i)][m];
                    const double wm = (time.a1[static_cast<std::size_t>(i)][m] /
                                       (std::exp(-gamma * sm / 2) * shape.q1(factors(shape.pole, sm))))
                                          .real();
                    sum += wm * std::norm(shape.beta(xi, sm, factors(shape.pole, sm)));
                }
                leak[i + 1] = leak[i] + sum;
            }
        }
        for (Index k = 0; k < n; ++k) {
            traj.mode_population.row(k) = (scale * ens.weights[k] * pop).transpose();
            traj.mode_leaked.row(k) = (gamma * scale * ens.weights[k] * leak).transpose();
        }
        return;
    }

    const BandQuadrature quad(params, ens, grid, time);
    for (Index k = 0; k < n; ++k) {
        const BandMoments m = quad.moments(k);
        const FourierSums f = quad.fourier(k);
        double cum_b = 0.0;
        for (Index i = 0; i < nt; ++i) {
            const Factors& fc = time.at[static_cast<std::size_t>(i)];
            const double t = grid[i];
            const Complex q1 = shape.q1(fc);
            const Complex q0 = shape.q0(fc);
            const double pop = std::exp(-gamma * t) * m.mx + std::norm(q1) * m.m2 +
                               2.0 * (q1 * std::conj(q0)).real() * m.m1 + std::norm(q0) * m.m0 -
                               2.0 * std::exp(-gamma * t / 2) * (q1 * f.f1[i] + q0 * f.f0[i]).real();
            traj.mode_population(k, i) = i == 0 ? 0.0 : std::max(0.0, scale * pop);
            if (i > 0) cum_b += -2.0 * f.step[i - 1].real();
            const double cum_a = m.mx * time.ix[i] + m.m2 * time.i11[i] + 2.0 * m.m1 * time.i10[i] +
                                 m.m0 * time.i00[i];
            traj.mode_leaked(k, i) = gamma * scale * (cum_a + cum_b);
        }
    }
}

void finish(const PhysicalParams& params, Trajectory& traj) {
    traj.eta2_P = traj.mode_population.colwise().sum().transpose();
    traj.Pi_p = traj.mode_leaked.colwise().sum().transpose();
    traj.eta2_E = (std::norm(params.ce0) - traj.c_e.array().abs2()).matrix();
    const DecayRates rates = decay_rate(traj.green, traj.green_dot);
    traj.gamma_t = rates.gamma;
    traj.s_t = rates.shift;
    traj.singular = rates.singular;
}

}  // namespace

Complex resolvent_root(const PhysicalParams& params) { return make_pole(params).omega; }

Complex green_function(const PhysicalParams& params, double t) {
    require_time(t);
    const Pole q = make_pole(params);
    const Factors f = factors(q, t);
    return f.ec - q.z * f.es;
}

Complex green_derivative(const PhysicalParams& params, double t) {
    require_time(t);
    const Pole q = make_pole(params);
    return -2.0 * params.coupling * params.coupling * factors(q, t).es;
}

Complex pseudomode_amplitude(const PhysicalParams& params, double mode_detuning, double mode_coupling,
                             double t) {
    require_time(t);
    const Shape s = pseudomode_shape(params);
    return params.ce0 * mode_coupling * s.beta(mode_detuning, t, factors(s.pole, t));
}

Complex mode_amplitude(const PhysicalParams& params, double mode_detuning, double t) {
    require_time(t);
    const Shape s = continuum_shape(params);
    return params.ce0 * s.beta(mode_detuning, t, factors(s.pole, t));
}

Trajectory build_trajectory(const PhysicalParams& params, const PseudomodeEnsemble& ensemble,
                            const TimeGrid& grid) {
    params.validate();
    Trajectory traj;
    traj.grid = grid;
    traj.ce0 = params.ce0;
    const Index nt = grid.size();
    const Index n = ensemble.count();
    const Shape shape = pseudomode_shape(params);

    traj.green.resize(nt);
    traj.green_dot.resize(nt);
    traj.b.resize(n, nt);
    for (Index i = 0; i < nt; ++i) {
        const Factors f = factors(shape.pole, grid[i]);
        traj.green[i] = f.ec - shape.pole.z * f.es;
        traj.green_dot[i] = -2.0 * params.coupling * params.coupling * f.es;
        for (Index k = 0; k < n; ++k)
            traj.b(k, i) = params.ce0 * ensemble.couplings[k] * shape.beta(ensemble.detunings[k], grid[i], f);
    }
    traj.c_e = params.ce0 * traj.green;
    traj.current = I * params.ce0 * traj.green_dot;
    fill_band_populations(params, ensemble, grid, traj);
    finish(params, traj);
    return traj;
}

Index required_steps(const PhysicalParams& params, const PseudomodeEnsemble& ensemble, double t_max) {
    const double rate = std::max({params.gamma_plus(), params.coupling, ensemble.detunings.cwiseAbs().maxCoeff()});
    return static_cast<Index>(std::floor(t_max * rate / 0.05)) + 1;
}

Trajectory ode_oracle(const PhysicalParams& params, const PseudomodeEnsemble& ensemble, const TimeGrid& grid,
                      OracleCoupling coupling) {
    params.validate();
    const double h = grid.dt();
    const double rate = std::max({params.gamma_plus(), params.coupling, ensemble.detunings.cwiseAbs().maxCoeff()});
    if (!(h * rate < 0.05))
        throw StabilityError("RK4 step " + std::to_string(h) + " too large; need n_steps >= " +
                             std::to_string(required_steps(params, ensemble, grid.t_max())));

    const Index n = ensemble.count();
    const Index nt = grid.size();
    const Eigen::ArrayXd& det = ensemble.detunings.array();
    const Eigen::ArrayXd& om = ensemble.couplings.array();
    const double w0 = params.coupling;
    const Complex z(-params.gamma_plus() / 2, params.detuning);
    const bool discrete = coupling == OracleCoupling::discrete;

    // State: [c_e, B, b_1..b_n]; B is the continuum pseudomode and only moves
    // in the continuum coupling.
    using State = Eigen::ArrayXcd;
    auto rhs = [&](double t, const State& y, State& dy) {
        const Complex ce = y[0];
        const Eigen::ArrayXcd rot = (I * det * t).exp();
        if (discrete) {
            dy[0] = -I * (om * rot.conjugate() * y.tail(n)).sum();
            dy[1] = 0.0;
        } else {
            dy[0] = -I * w0 * y[1];
            dy[1] = z * y[1] - I * w0 * ce;
        }
        dy.tail(n) = -0.5 * params.gamma * y.tail(n) - I * om * rot * ce;
    };

    Trajectory traj;
    traj.grid = grid;
    traj.ce0 = params.ce0;
    traj.c_e.resize(nt);
    traj.green_dot.resize(nt);
    traj.current.resize(nt);
    traj.b.resize(n, nt);

    State y = State::Zero(n + 2);
    y[0] = params.ce0;
    State k1(n + 2), k2(n + 2), k3(n + 2), k4(n + 2);
    auto record = [&](Index i) {
        rhs(grid[i], y, k1);
        traj.c_e[i] = y[0];
        traj.current[i] = I * k1[0];
        traj.green_dot[i] = k1[0];
        traj.b.col(i) = y.tail(n).matrix();
    };
    record(0);
    for (Index i = 0; i + 1 < nt; ++i) {
        const double t = grid[i];
        const double step = grid[i + 1] - t;
        rhs(t, y, k1);
        rhs(t + step / 2, y + (step / 2) * k1, k2);
        rhs(t + step / 2, y + (step / 2) * k2, k3);
        rhs(t + step, y + step * k3, k4);
        y += (step / 6) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        record(i + 1);
    }

    if (std::abs(params.ce0) > 0.0) {
        traj.green = traj.c_e / params.ce0;
        traj.green_dot /= params.ce0;
    } else {
        traj.green = Eigen::VectorXcd::Constant(nt, Complex(nan, nan));
        traj.green_dot = traj.green;
    }
    traj.mode_population = traj.b.cwiseAbs2();
    traj.mode_leaked.resize(n, nt);
    for (Index k = 0; k < n; ++k)
        traj.mode_leaked.row(k) =
            vacuum_population(traj.mode_population.row(k).transpose(), grid.dt(), params.gamma).transpose();
    finish(params, traj);
    return traj;
}

Eigen::VectorXd vacuum_population(const Eigen::VectorXd& eta2, double dt, double gamma) {
    const Index n = eta2.size();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    for (Index i = 1; i < n; ++i) {
        if (i % 2 == 0)
            out[i] = out[i - 2] + dt / 3.0 * (eta2[i - 2] + 4.0 * eta2[i - 1] + eta2[i]);
        else if (i >= 2)
            out[i] = out[i - 1] + dt / 12.0 * (-eta2[i - 2] + 8.0 * eta2[i - 1] + 5.0 * eta2[i]);
        else
            out[i] = 0.5 * dt * (eta2[0] + eta2[1]);
    }
    // Odd entries chain off the even ones, so rounding in the end correction
    // never accumulates.
    return gamma * out;
}

DecayRates decay_rate(const Eigen::VectorXcd& green, const Eigen::VectorXcd& green_dot) {
    DecayRates r;
    const Index n = green.size();
    r.gamma.resize(n);
    r.shift.resize(n);
    for (Index i = 0; i < n; ++i) {
        if (!(std::norm(green[i]) > singular_threshold)) {
            r.gamma[i] = r.shift[i] = nan;
            r.singular.push_back(i);
            continue;
        }
        const Complex ratio = green_dot[i] / green[i];
        r.gamma[i] = -2.0 * ratio.real();
        r.shift[i] = -2.0 * ratio.imag();
    }
    return r;
}

DecayRates decay_rate(const PhysicalParams& params, const TimeGrid& grid) {
    Eigen::VectorXcd g(grid.size()), gd(grid.size());
    for (Index i = 0; i < grid.size(); ++i) {
        g[i] = green_function(params, grid[i]);
        gd[i] = green_derivative(params, grid[i]);
    }
    return decay_rate(g, gd);
}

namespace {

// dc_e/dt = −i S, so γ = −2 Im(S/c_e) and s = 2 Re(S/c_e).
DecayRates rates_from_current(const Eigen::VectorXcd& c_e, const Eigen::VectorXcd& current, Complex ce0) {
    DecayRates r;
    const Index n = c_e.size();
    r.gamma.resize(n);
    r.shift.resize(n);
    const double ref = std::norm(ce0);
    for (Index i = 0; i < n; ++i) {
        if (!(std::norm(c_e[i]) > singular_threshold * ref)) {
            r.gamma[i] = r.shift[i] = nan;
            r.singular.push_back(i);
            continue;
        }
        const Complex ratio = current[i] / c_e[i];
        r.gamma[i] = -2.0 * ratio.imag();
        r.shift[i] = 2.0 * ratio.real();
    }
    return r;
}

}  // namespace

DecayRates decay_rate_mode_sum(const Trajectory& traj) {
    return rates_from_current(traj.c_e, traj.current, traj.ce0);
}

DecayRates decay_rate_node_sum(const Trajectory& traj, const PseudomodeEnsemble& ensemble) {
    Eigen::VectorXcd current(traj.size());
    for (Index i = 0; i < traj.size(); ++i) {
        const double t = traj.grid[i];
        Complex s = 0.0;
        for (Index k = 0; k < ensemble.count(); ++k)
            s += ensemble.couplings[k] * std::polar(1.0, -ensemble.detunings[k] * t) * traj.b(k, i);
        current[i] = s;
    }
    return rates_from_current(traj.c_e, current, traj.ce0);
}

Eigen::VectorXd population_balance_residual(const Trajectory& traj, const PhysicalParams& params) {
    const Index n = traj.size();
    Eigen::VectorXd out(n);
    if (n < 2) return Eigen::VectorXd::Zero(n);
    const double h = traj.grid.dt();
    for (Index i = 0; i < n; ++i) {
        double d;
        if (i == 0)
            d = (traj.eta2_P[1] - traj.eta2_P[0]) / h;
        else if (i == n - 1)
            d = (traj.eta2_P[n - 1] - traj.eta2_P[n - 2]) / h;
        else
            d = (traj.eta2_P[i + 1] - traj.eta2_P[i - 1]) / (2.0 * h);
        out[i] = std::abs(d + params.gamma * traj.eta2_P[i] - traj.gamma_t[i] * std::norm(traj.c_e[i]));
    }
    return out;
}

QuasiboundPrediction quasibound_prediction(const PhysicalParams& params, const PseudomodeEnsemble& ensemble) {
    const Shape s = pseudomode_shape(params);
    double sum = 0.0;
    for (Index k = 0; k < ensemble.count(); ++k) {
        const double xi = ensemble.detunings[k];
        const double w = ensemble.couplings[k] * ensemble.couplings[k];
        sum += 16.0 * w * std::norm(s.X(xi)) / std::norm(s.checked_den(xi));
    }
    return {sum * std::norm(params.ce0), params.gamma <= 0.1 * params.gamma_plus()};
}

Eigen::VectorXd purity(const Trajectory& traj, const PhysicalParams& params) {
    const double cg2 = std::norm(params.cg);
    const Eigen::ArrayXd pi = traj.Pi_p.array();
    const Eigen::ArrayXd norm = cg2 + traj.c_e.array().abs2() + traj.eta2_P.array();
    return (pi.square() + norm.square() + 2.0 * cg2 * pi).matrix();
}

}  // namespace darwinize
