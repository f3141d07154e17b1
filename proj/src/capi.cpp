#include "gridadmm/gridadmm.h"

#include <cmath>
#include <cstring>
#include <map>
#include <string>
#include <vector>

#include "driver.hpp"
#include "netdata.hpp"
#include "outputs.hpp"
#include "tracking.hpp"

namespace {

thread_local std::string g_last_error = "";

gridadmm_status fail(gridadmm_status code, const std::string& message) {
    g_last_error = message;
    return code;
}

// (rho_pq, rho_va) pairs; small cases tuned on this solver, large pegase/
// ACTIVSg cases taken from the published per-case penalty table.
const std::map<std::string, std::pair<double, double>>& preset_table() {
    static const std::map<std::string, std::pair<double, double>> table = {
        {"case2", {100.0, 10000.0}},
        {"case9", {100.0, 10000.0}},
        {"case30", {100.0, 10000.0}},
        {"case118", {100.0, 10000.0}},
        {"case1354pegase", {1e1, 1e3}},
        {"case2869pegase", {1e1, 1e3}},
        {"case9241pegase", {5e1, 5e3}},
        {"case13659pegase", {5e1, 5e3}},
        {"case_ACTIVSg25k", {3e3, 3e4}},
        {"case_ACTIVSg70k", {3e4, 3e5}},
    };
    return table;
}

}  // namespace

struct gridadmm_network {
    gridadmm::PowerNetwork net;
};

struct gridadmm_config {
    gridadmm::SolverConfig solver;
    double ramp_frac = 0.02;
};

struct gridadmm_report {
    gridadmm::SolveReport report;
    gridadmm::PowerNetwork net;  // snapshot used for output writers
};

struct gridadmm_track {
    std::vector<gridadmm::PeriodReport> periods;
    gridadmm::PowerNetwork net;
};

extern "C" {

const char* gridadmm_last_error(void) { return g_last_error.c_str(); }

gridadmm_status gridadmm_network_load(const char* path, gridadmm_network** out) {
    if (!path || !out)
        return fail(GRIDADMM_ERR_INVALID_ARG, "null argument to network_load");
    try {
        auto* handle = new gridadmm_network{gridadmm::load_case(path)};
        *out = handle;
        return GRIDADMM_OK;
    } catch (const gridadmm::ParseError& e) {
        return fail(GRIDADMM_ERR_PARSE, e.what());
    } catch (const std::exception& e) {
        return fail(GRIDADMM_ERR_IO, e.what());
    }
}

void gridadmm_network_free(gridadmm_network* net) { delete net; }

int gridadmm_network_num_buses(const gridadmm_network* net) {
    return net ? static_cast<int>(net->net.buses.size()) : 0;
}
int gridadmm_network_num_generators(const gridadmm_network* net) {
    return net ? static_cast<int>(net->net.generators.size()) : 0;
}
int gridadmm_network_num_branches(const gridadmm_network* net) {
    return net ? static_cast<int>(net->net.branches.size()) : 0;
}

gridadmm_config* gridadmm_config_new(void) { return new gridadmm_config{}; }
void gridadmm_config_free(gridadmm_config* cfg) { delete cfg; }

namespace {

struct Field {
    double* ptr;
    bool integer;
    double min;
};

std::map<std::string, Field> config_fields(gridadmm_config* cfg,
                                           double* int_slots) {
    // int_slots holds shadow doubles for the integer members.
    int_slots[0] = cfg->solver.max_outer;
    int_slots[1] = cfg->solver.max_inner;
    int_slots[2] = cfg->solver.workers;
    return {
        {"rho_pq", {&cfg->solver.rho_pq, false, 1e-12}},
        {"rho_va", {&cfg->solver.rho_va, false, 1e-12}},
        {"beta0", {&cfg->solver.beta0, false, 1e-12}},
        {"eps", {&cfg->solver.eps, false, 1e-12}},
        {"inner_tol", {&cfg->solver.inner_tol, false, 0.0}},
        {"max_outer", {&int_slots[0], true, 1.0}},
        {"max_inner", {&int_slots[1], true, 1.0}},
        {"workers", {&int_slots[2], true, 1.0}},
        {"lambda_bound", {&cfg->solver.lambda_max, false, 1.0}},
        {"beta_max", {&cfg->solver.beta_max, false, 1.0}},
        {"ramp_frac", {&cfg->ramp_frac, false, 1e-12}},
    };
}

}  // namespace

gridadmm_status gridadmm_config_set(gridadmm_config* cfg, const char* key,
                                    double value) {
    if (!cfg || !key)
        return fail(GRIDADMM_ERR_INVALID_ARG, "null argument to config_set");
    double slots[3];
    auto fields = config_fields(cfg, slots);
    const auto it = fields.find(key);
    if (it == fields.end())
        return fail(GRIDADMM_ERR_INVALID_ARG,
                    std::string("unknown config key: ") + key);
    const Field& f = it->second;
    if (!std::isfinite(value) || value < f.min ||
        (f.integer && value != std::floor(value)))
        return fail(GRIDADMM_ERR_INVALID_ARG,
                    std::string("invalid value for config key ") + key);
    *f.ptr = value;
    cfg->solver.max_outer = static_cast<int>(slots[0]);
    cfg->solver.max_inner = static_cast<int>(slots[1]);
    cfg->solver.workers = static_cast<int>(slots[2]);
    cfg->solver.lambda_min = -cfg->solver.lambda_max;
    return GRIDADMM_OK;
}

gridadmm_status gridadmm_config_get(const gridadmm_config* cfg, const char* key,
                                    double* out) {
    if (!cfg || !key || !out)
        return fail(GRIDADMM_ERR_INVALID_ARG, "null argument to config_get");
    double slots[3];
    auto fields = config_fields(const_cast<gridadmm_config*>(cfg), slots);
    const auto it = fields.find(key);
    if (it == fields.end())
        return fail(GRIDADMM_ERR_INVALID_ARG,
                    std::string("unknown config key: ") + key);
    *out = *it->second.ptr;
    return GRIDADMM_OK;
}

gridadmm_status gridadmm_config_preset(gridadmm_config* cfg, const char* name) {
    if (!cfg || !name)
        return fail(GRIDADMM_ERR_INVALID_ARG, "null argument to config_preset");
    const auto it = preset_table().find(name);
    if (it == preset_table().end())
        return fail(GRIDADMM_ERR_INVALID_ARG,
                    std::string("no penalty preset for case: ") + name);
    cfg->solver.rho_pq = it->second.first;
    cfg->solver.rho_va = it->second.second;
    return GRIDADMM_OK;
}

namespace {

gridadmm_status status_of(const gridadmm::SolveReport& report) {
    switch (report.status) {
        case gridadmm::SolveStatus::Converged: return GRIDADMM_OK;
        case gridadmm::SolveStatus::IterationLimit:
            return GRIDADMM_ERR_ITERATION_LIMIT;
        case gridadmm::SolveStatus::Diverged: return GRIDADMM_ERR_DIVERGED;
    }
    return GRIDADMM_ERR_INTERNAL;
}

}  // namespace

gridadmm_status gridadmm_solve(const gridadmm_network* net,
                               const gridadmm_config* cfg,
                               gridadmm_report** out) {
    if (!net || !cfg || !out)
        return fail(GRIDADMM_ERR_INVALID_ARG, "null argument to solve");
    try {
        auto* rep = new gridadmm_report{
            gridadmm::solve(net->net, cfg->solver), net->net};
        *out = rep;
        const gridadmm_status s = status_of(rep->report);
        if (s != GRIDADMM_OK)
            g_last_error = rep->report.diagnostic.empty()
                               ? "solve did not converge"
                               : rep->report.diagnostic;
        return s;
    } catch (const std::exception& e) {
        return fail(GRIDADMM_ERR_INTERNAL, e.what());
    }
}

void gridadmm_report_free(gridadmm_report* rep) { delete rep; }

gridadmm_status gridadmm_report_metric(const gridadmm_report* rep,
                                       const char* key, double* out) {
    if (!rep || !key || !out)
        return fail(GRIDADMM_ERR_INVALID_ARG, "null argument to report_metric");
    const std::map<std::string, double> metrics = {
        {"objective", rep->report.quality.objective},
        {"balance_inf", rep->report.quality.balance_inf},
        {"limit_violation", rep->report.quality.limit_violation},
        {"bound_violation", rep->report.quality.bound_violation},
        {"c_inf", rep->report.quality.c_inf},
        {"outer_iterations", static_cast<double>(rep->report.outer_iterations)},
        {"inner_iterations", static_cast<double>(rep->report.inner_iterations)},
        {"branch_solve_failures",
         static_cast<double>(rep->report.branch_solve_failures)},
    };
    const auto it = metrics.find(key);
    if (it == metrics.end())
        return fail(GRIDADMM_ERR_INVALID_ARG,
                    std::string("unknown metric key: ") + key);
    *out = it->second;
    return GRIDADMM_OK;
}

gridadmm_status gridadmm_report_dispatch(const gridadmm_report* rep, double* pg,
                                         double* qg) {
    if (!rep)
        return fail(GRIDADMM_ERR_INVALID_ARG, "null report in report_dispatch");
    const gridadmm::Solution& sol = rep->report.solution;
    if (pg) std::memcpy(pg, sol.pg.data(), sol.pg.size() * sizeof(double));
    if (qg) std::memcpy(qg, sol.qg.data(), sol.qg.size() * sizeof(double));
    return GRIDADMM_OK;
}

gridadmm_status gridadmm_report_voltages(const gridadmm_report* rep, double* vm,
                                         double* va) {
    if (!rep)
        return fail(GRIDADMM_ERR_INVALID_ARG, "null report in report_voltages");
    const gridadmm::Solution& sol = rep->report.solution;
    if (vm) std::memcpy(vm, sol.vm.data(), sol.vm.size() * sizeof(double));
    if (va) std::memcpy(va, sol.va.data(), sol.va.size() * sizeof(double));
    return GRIDADMM_OK;
}

gridadmm_status gridadmm_report_write_solution(const gridadmm_report* rep,
                                               const char* path,
                                               double ref_objective) {
    if (!rep || !path)
        return fail(GRIDADMM_ERR_INVALID_ARG, "null argument to write_solution");
    try {
        gridadmm::write_solution_json(path, rep->net, rep->report, ref_objective);
        return GRIDADMM_OK;
    } catch (const std::exception& e) {
        return fail(GRIDADMM_ERR_IO, e.what());
    }
}

gridadmm_status gridadmm_report_write_convergence(const gridadmm_report* rep,
                                                  const char* path) {
    if (!rep || !path)
        return fail(GRIDADMM_ERR_INVALID_ARG,
                    "null argument to write_convergence");
    try {
        gridadmm::write_convergence_csv(path, rep->report.series);
        return GRIDADMM_OK;
    } catch (const std::exception& e) {
        return fail(GRIDADMM_ERR_IO, e.what());
    }
}

gridadmm_status gridadmm_track_run(const gridadmm_network* net,
                                   const gridadmm_config* cfg,
                                   const char* profile_path,
                                   gridadmm_track** out) {
    if (!net || !cfg || !profile_path || !out)
        return fail(GRIDADMM_ERR_INVALID_ARG, "null argument to track_run");
    try {
        gridadmm::TrackingScenario scenario =
            gridadmm::load_profile_csv(profile_path, net->net);
        scenario.ramp_fraction = cfg->ramp_frac;
        auto* trk = new gridadmm_track{
            gridadmm::run_tracking(net->net, cfg->solver, scenario), net->net};
        *out = trk;
        for (const gridadmm::PeriodReport& p : trk->periods) {
            const gridadmm_status s = status_of(p.report);
            if (s != GRIDADMM_OK) {
                g_last_error =
                    "period " + std::to_string(p.period) + " did not converge";
                return s;
            }
        }
        return GRIDADMM_OK;
    } catch (const gridadmm::RampError& e) {
        return fail(GRIDADMM_ERR_INFEASIBLE_RAMP, e.what());
    } catch (const gridadmm::ParseError& e) {
        return fail(GRIDADMM_ERR_PARSE, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(GRIDADMM_ERR_INVALID_ARG, e.what());
    } catch (const std::exception& e) {
        return fail(GRIDADMM_ERR_INTERNAL, e.what());
    }
}

void gridadmm_track_free(gridadmm_track* trk) { delete trk; }

int gridadmm_track_num_periods(const gridadmm_track* trk) {
    return trk ? static_cast<int>(trk->periods.size()) : 0;
}

gridadmm_status gridadmm_track_period_report(const gridadmm_track* trk,
                                             int period,
                                             gridadmm_report** out) {
    if (!trk || !out)
        return fail(GRIDADMM_ERR_INVALID_ARG, "null argument to period_report");
    if (period < 1 || period > static_cast<int>(trk->periods.size()))
        return fail(GRIDADMM_ERR_INVALID_ARG,
                    "period out of range: " + std::to_string(period));
    *out = new gridadmm_report{trk->periods[period - 1].report, trk->net};
    return GRIDADMM_OK;
}

gridadmm_status gridadmm_track_write_periods(const gridadmm_track* trk,
                                             const char* path,
                                             const double* ref_objectives,
                                             int num_refs) {
    if (!trk || !path)
        return fail(GRIDADMM_ERR_INVALID_ARG, "null argument to write_periods");
    try {
        std::vector<double> refs;
        if (ref_objectives && num_refs > 0)
            refs.assign(ref_objectives, ref_objectives + num_refs);
        gridadmm::write_periods_csv(path, trk->periods, refs);
        return GRIDADMM_OK;
    } catch (const std::exception& e) {
        return fail(GRIDADMM_ERR_IO, e.what());
    }
}

}  // extern "C"
