#ifndef GRIDADMM_KERNELS_HPP
#define GRIDADMM_KERNELS_HPP

#include <array>
#include <stdexcept>
#include <vector>

#include "decomp.hpp"
#include "netdata.hpp"
#include "tron.hpp"

namespace gridadmm {

class SingularBusError : public std::runtime_error {
public:
    SingularBusError(int bus, const std::string& what)
        : std::runtime_error(what), bus(bus) {}
    int bus;
};

// One branch's bound-constrained NLP in (vi, vj, thi, thj[, sij, sji]).
// The objective is the sum of the eight consensus augmented-Lagrangian terms
// plus, for rate-limited branches, the two line-limit terms on
// p^2 + q^2 + s = 0 with s in [-rate^2, 0].
class BranchProblem final : public BoxNlp {
public:
    BranchProblem(const Branch& branch, double vmin_i, double vmax_i,
                  double vmin_j, double vmax_j, double rate_tightened);

    // Bus-side targets, multipliers, artificial variables and penalties for
    // the branch's 8 coupling rows, in BranchRow order.
    std::array<double, 8> target{};
    std::array<double, 8> y{};
    std::array<double, 8> z{};
    std::array<double, 8> rho{};
    double lt_ij = 0.0, lt_ji = 0.0;  // line-limit multipliers
    double rho_t = 0.0;               // line-limit penalty

    int dim() const override { return limited_ ? 6 : 4; }
    const double* lower() const override { return lower_.data(); }
    const double* upper() const override { return upper_.data(); }
    double value(const double* x) const override;
    void gradient(const double* x, double* g) const override;
    void hessian(const double* x, double* h) const override;

    bool limited() const { return limited_; }
    // Consensus-side quantities (pij, qij, pji, qji, wi, thi, wj, thj) at a point.
    std::array<double, 8> consensus_values(const double* x) const;
    // Line-limit equality residuals p^2 + q^2 + s at a point.
    double limit_residual_ij(const double* x) const;
    double limit_residual_ji(const double* x) const;

private:
    void eval(const double* x, double* f, double* g, double* h) const;

    BranchAdmittance y_;
    bool limited_ = false;
    std::array<double, 6> lower_{};
    std::array<double, 6> upper_{};
};

struct BranchSolveStats {
    int failures = 0;        // solver failures; previous point kept
    long tron_iterations = 0;
    double max_projected_gradient = 0.0;
};

// x-phase: closed-form generator update and batched branch NLP solves.
// Both read only (xbar, z, y) and write disjoint x-side entries.
void solve_generators(AdmmState& state, const PowerNetwork& net,
                      const CouplingLayout& layout);

BranchSolveStats solve_branch_batch(AdmmState& state, const PowerNetwork& net,
                                    const CouplingLayout& layout,
                                    const TronSettings& tron, int workers,
                                    double limit_tighten);

// xbar-phase: per-bus equality-constrained QP, closed form per Eq.-(7)
// structure; throws SingularBusError for a bus with no degrees of freedom.
void solve_buses(AdmmState& state, const PowerNetwork& net,
                 const CouplingLayout& layout, int workers);

// z-phase: elementwise unconstrained quadratic minimum.
void solve_z(AdmmState& state, const CouplingLayout& layout);

// Inner multiplier update y += rho * (x - xbar + z).
void update_y(AdmmState& state, const CouplingLayout& layout);

struct OuterSchedule {
    double lambda_min = -1e12;
    double lambda_max = 1e12;
    double beta_growth = 10.0;
    double beta_shrink_trigger = 0.25;  // required z-norm reduction factor
    double beta_max = 1e12;
};

// Outer update: lambda <- clamp(lambda + beta z); beta grows when ||z||_inf
// failed to shrink by the trigger factor relative to the previous outer
// iteration (pass a negative prev_z_inf on the first one).
void update_outer(AdmmState& state, const OuterSchedule& schedule,
                  double z_inf, double prev_z_inf);

}  // namespace gridadmm

#endif
