#include "darwinize/infotheory.hpp"

#include <algorithm>
#include <string>

namespace darwinize {

FragmentKind parse_kind(std::string_view name) {
    if (name == "subenv" || name == "subenvironments") return FragmentKind::subenvironments;
    if (name == "pseudo" || name == "pseudomodes") return FragmentKind::pseudomodes;
    throw InvalidParameter("unknown fragment kind '" + std::string(name) + "'");
}

std::string_view to_string(FragmentKind kind) {
    return kind == FragmentKind::subenvironments ? "subenv" : "pseudo";
}

FragmentSpec make_fragment(std::vector<Index> indices, Index total, FragmentKind kind) {
    if (total < 1) throw InvalidParameter("fragment drawn from an empty ensemble");
    std::sort(indices.begin(), indices.end());
    if (std::adjacent_find(indices.begin(), indices.end()) != indices.end())
        throw InvalidParameter("fragment indices repeat");
    if (!indices.empty() && (indices.front() < 0 || indices.back() >= total))
        throw InvalidParameter("fragment index out of range");
    FragmentSpec f;
    f.fraction = static_cast<double>(indices.size()) / static_cast<double>(total);
    f.indices = std::move(indices);
    f.kind = kind;
    return f;
}

Eigen::VectorXd fragment_populations(const Trajectory& traj, FragmentKind kind, Index i) {
    if (kind == FragmentKind::pseudomodes) return traj.mode_population.col(i);
    return traj.mode_population.col(i) + traj.mode_leaked.col(i);
}

namespace {

SystemFragmentState reduce_at(const Trajectory& traj, const PhysicalParams& params,
                              const FragmentSpec& fragment, double t) {
    const Index i = traj.grid.index_of(t);
    const Eigen::VectorXd pop = fragment_populations(traj, fragment.kind, i);
    double eta2 = 0.0;
    for (Index k : fragment.indices) {
        if (k < 0 || k >= pop.size()) throw InvalidParameter("fragment index out of range");
        eta2 += pop[k];
    }
    SystemFragmentState s;
    s.rho = collective_state(eta2, traj.c_e[i], params.cg);
    s.fragment = fragment;
    s.t = traj.grid[i];
    s.eta2_f = eta2;
    s.pi_f = s.rho(0, 0).real();
    return s;
}

}  // namespace

SystemFragmentState reduce_subenv(const Trajectory& traj, const PhysicalParams& params,
                                  const FragmentSpec& fragment, double t) {
    if (fragment.kind != FragmentKind::subenvironments)
        throw InvalidParameter("reduce_subenv needs a sub-environment fragment");
    return reduce_at(traj, params, fragment, t);
}

SystemFragmentState reduce_pseudo(const Trajectory& traj, const PhysicalParams& params,
                                  const FragmentSpec& fragment, double t) {
    if (fragment.kind != FragmentKind::pseudomodes)
        throw InvalidParameter("reduce_pseudo needs a pseudomode fragment");
    return reduce_at(traj, params, fragment, t);
}

SystemFragmentState reduce(const Trajectory& traj, const PhysicalParams& params,
                           const FragmentSpec& fragment, double t) {
    return reduce_at(traj, params, fragment, t);
}

double binary_entropy(double x) {
    if (!(x >= -1e-12 && x <= 1.0 + 1e-12))
        throw DomainError("binary entropy argument " + std::to_string(x) + " outside [0, 1]");
    x = std::clamp(x, 0.0, 1.0);
    auto term = [](double p) { return p > 0.0 ? -p * std::log(p) : 0.0; };
    return term(x) + term(1.0 - x);
}

namespace {

void require_unit(double x, const char* name) {
    if (!(x >= -1e-12 && x <= 1.0 + 1e-12))
        throw DomainError(std::string(name) + " = " + std::to_string(x) + " outside [0, 1]");
}

}  // namespace

double analytic_partial_info_E(double f, double abs_ce2, double eta2_E) {
    require_unit(f, "f");
    require_unit(abs_ce2, "|c_e|^2");
    require_unit(eta2_E, "eta2_E");
    return binary_entropy(abs_ce2) + binary_entropy(f * eta2_E) - binary_entropy((1.0 - f) * eta2_E);
}

double analytic_partial_info_P(double f, double abs_ce2, double eta2_P, double Pi_p) {
    require_unit(f, "f");
    require_unit(abs_ce2, "|c_e|^2");
    require_unit(eta2_P, "eta2_P");
    require_unit(Pi_p, "Pi_p");
    if (f * eta2_P + Pi_p > 1.0 + 1e-12) throw DomainError("f eta2_P + Pi_p exceeds 1");
    return binary_entropy(abs_ce2) + binary_entropy(f * eta2_P) -
           binary_entropy((1.0 - f) * eta2_P + Pi_p);
}

}  // namespace darwinize
