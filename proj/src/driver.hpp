#ifndef GRIDADMM_DRIVER_HPP
#define GRIDADMM_DRIVER_HPP

#include <cmath>
#include <string>
#include <vector>

#include "decomp.hpp"
#include "kernels.hpp"
#include "netdata.hpp"
#include "tron.hpp"

namespace gridadmm {

struct SolverConfig {
    double rho_pq = 10.0;
    double rho_va = 1000.0;
    double beta0 = 1e3;
    double beta_growth = 10.0;
    double beta_shrink_trigger = 0.25;
    double beta_max = 1e12;
    double eps = 1e-4;           // outer tolerance on ||z||_inf
    double inner_tol = 0.0;      // 0 = auto: eps * sqrt(m)
    int max_outer = 20;
    int max_inner = 1000;
    double lambda_min = -1e12;
    double lambda_max = 1e12;
    double divergence_threshold = 1e8;
    double limit_tighten = 0.99;  // usable fraction of line capacity
    // Warm-start cap on the carried outer penalty (tracking): a saturated
    // beta makes ||z|| small regardless of how stale lambda is, so the outer
    // test would pass vacuously.  0 keeps the carried value.
    double warm_beta_cap = 1e6;
    TronSettings tron;
    int workers = 1;

    double effective_inner_tol(int m) const {
        return inner_tol > 0.0 ? inner_tol : eps * std::sqrt(static_cast<double>(m));
    }
};

enum class SolveStatus { Converged, IterationLimit, Diverged };

struct IterationRecord {
    int outer = 0;
    int inner = 0;          // 1-based within the outer iteration
    double primal_res = 0.0;  // ||x - xbar + z||_inf
    double dual_res = 0.0;    // rho_max * ||xbar change||_inf
    double z_norm = 0.0;      // ||z||_inf
    double elapsed_s = 0.0;   // since solve start
};

struct Solution {
    std::vector<double> pg, qg;  // per generator (p.u.)
    std::vector<double> vm, va;  // per bus
    std::vector<BranchFlows> flows;  // recomputed from bus voltages
};

struct QualityMetrics {
    double balance_inf = 0.0;
    double limit_violation = 0.0;   // vs the original (untightened) rate
    double bound_violation = 0.0;
    double c_inf = 0.0;             // max of the three above
    double objective = 0.0;         // original cost units
};

struct PhaseTimes {
    double x_s = 0.0, xbar_s = 0.0, z_s = 0.0, y_s = 0.0;
};

struct SolveReport {
    SolveStatus status = SolveStatus::IterationLimit;
    std::vector<IterationRecord> series;
    int outer_iterations = 0;
    int inner_iterations = 0;  // cumulative
    int branch_solve_failures = 0;
    PhaseTimes phase_times;
    Solution solution;
    QualityMetrics quality;
    std::string diagnostic;  // set on divergence
};

AdmmState cold_start(const PowerNetwork& net, const CouplingLayout& layout,
                     const SolverConfig& config);

// Runs Algorithm-1-style outer/inner loops.  `initial` supplies a warm-start
// state (copied); `final_state` receives the terminal state when non-null.
SolveReport solve(const PowerNetwork& net, const SolverConfig& config,
                  const AdmmState* initial = nullptr,
                  AdmmState* final_state = nullptr);

Solution extract_solution(const PowerNetwork& net, const CouplingLayout& layout,
                          const AdmmState& state);

QualityMetrics evaluate_solution(const PowerNetwork& net, const Solution& sol);

}  // namespace gridadmm

#endif
