/* gridadmm: component-based two-level ADMM solver for AC optimal power flow.
 *
 * C interface over the C++ core.  All objects are opaque handles; every
 * fallible call returns a gridadmm_status, and gridadmm_last_error() holds a
 * thread-local description of the most recent failure on this thread.
 */
#ifndef GRIDADMM_H
#define GRIDADMM_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gridadmm_status {
    GRIDADMM_OK = 0,
    GRIDADMM_ERR_IO = 1,
    GRIDADMM_ERR_PARSE = 2,
    GRIDADMM_ERR_INVALID_ARG = 3,
    GRIDADMM_ERR_ITERATION_LIMIT = 4,
    GRIDADMM_ERR_DIVERGED = 5,
    GRIDADMM_ERR_INFEASIBLE_RAMP = 6,
    GRIDADMM_ERR_INTERNAL = 7
} gridadmm_status;

typedef struct gridadmm_network gridadmm_network;
typedef struct gridadmm_config gridadmm_config;
typedef struct gridadmm_report gridadmm_report;   /* one cold/warm solve */
typedef struct gridadmm_track gridadmm_track;     /* multi-period run */

/* Thread-local message for the last failing call on this thread; never NULL. */
const char* gridadmm_last_error(void);

/* ---- network ----------------------------------------------------------- */

gridadmm_status gridadmm_network_load(const char* path, gridadmm_network** out);
void gridadmm_network_free(gridadmm_network* net);
int gridadmm_network_num_buses(const gridadmm_network* net);
int gridadmm_network_num_generators(const gridadmm_network* net);
int gridadmm_network_num_branches(const gridadmm_network* net);

/* ---- config ------------------------------------------------------------ */

gridadmm_config* gridadmm_config_new(void); /* paper-style defaults */
void gridadmm_config_free(gridadmm_config* cfg);

/* Known keys: rho_pq, rho_va, beta0, eps, inner_tol, max_outer, max_inner,
 * workers, lambda_bound, beta_max, ramp_frac.  Unknown keys or out-of-range
 * values return GRIDADMM_ERR_INVALID_ARG. */
gridadmm_status gridadmm_config_set(gridadmm_config* cfg, const char* key,
                                    double value);
gridadmm_status gridadmm_config_get(const gridadmm_config* cfg, const char* key,
                                    double* out);

/* Loads the built-in (rho_pq, rho_va) pair for a named case, e.g. "case9",
 * "case118", "case1354pegase".  Unknown names return ERR_INVALID_ARG. */
gridadmm_status gridadmm_config_preset(gridadmm_config* cfg, const char* name);

/* ---- cold-start solve --------------------------------------------------- */

/* GRIDADMM_OK / ERR_ITERATION_LIMIT / ERR_DIVERGED all produce a report. */
gridadmm_status gridadmm_solve(const gridadmm_network* net,
                               const gridadmm_config* cfg,
                               gridadmm_report** out);
void gridadmm_report_free(gridadmm_report* rep);

/* Known keys: objective, balance_inf, limit_violation, bound_violation,
 * c_inf, outer_iterations, inner_iterations, branch_solve_failures. */
gridadmm_status gridadmm_report_metric(const gridadmm_report* rep,
                                       const char* key, double* out);

/* Copies generator set points / bus voltages; arrays must hold num_generators
 * resp. num_buses doubles.  Any output pointer may be NULL to skip it. */
gridadmm_status gridadmm_report_dispatch(const gridadmm_report* rep, double* pg,
                                         double* qg);
gridadmm_status gridadmm_report_voltages(const gridadmm_report* rep, double* vm,
                                         double* va);

gridadmm_status gridadmm_report_write_solution(const gridadmm_report* rep,
                                               const char* path,
                                               double ref_objective);
gridadmm_status gridadmm_report_write_convergence(const gridadmm_report* rep,
                                                  const char* path);

/* ---- tracking ----------------------------------------------------------- */

/* Profile CSV: header "period,multiplier" or "period,bus,multiplier". */
gridadmm_status gridadmm_track_run(const gridadmm_network* net,
                                   const gridadmm_config* cfg,
                                   const char* profile_path,
                                   gridadmm_track** out);
void gridadmm_track_free(gridadmm_track* trk);
int gridadmm_track_num_periods(const gridadmm_track* trk);
gridadmm_status gridadmm_track_period_report(const gridadmm_track* trk,
                                             int period, /* 1-based */
                                             gridadmm_report** out);
gridadmm_status gridadmm_track_write_periods(const gridadmm_track* trk,
                                             const char* path,
                                             const double* ref_objectives,
                                             int num_refs);

#ifdef __cplusplus
}
#endif

#endif /* GRIDADMM_H */
