#include "driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

namespace gridadmm {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double inf_norm(const std::vector<double>& v) {
    double n = 0.0;
    for (double x : v) n = std::max(n, std::abs(x));
    return n;
}

}  // namespace

AdmmState cold_start(const PowerNetwork& net, const CouplingLayout& layout,
                     const SolverConfig& config) {
    AdmmState s = make_state(net, layout, config.rho_pq, config.rho_va, config.beta0);

    for (size_t g = 0; g < net.generators.size(); ++g) {
        const Generator& gen = net.generators[g];
        const int pr = layout.gen_p_row(static_cast<int>(g));
        const int qr = layout.gen_q_row(static_cast<int>(g));
        s.x[pr] = s.xbar[pr] = 0.5 * (gen.pmin + gen.pmax);
        s.x[qr] = s.xbar[qr] = 0.5 * (gen.qmin + gen.qmax);
    }
    for (size_t i = 0; i < net.buses.size(); ++i) {
        const double v = 0.5 * (net.buses[i].vmin + net.buses[i].vmax);
        s.bus_w[i] = v * v;
        s.bus_theta[i] = 0.0;
    }
    for (size_t b = 0; b < net.branches.size(); ++b) {
        const Branch& br = net.branches[b];
        const double vi = 0.5 * (net.buses[br.from].vmin + net.buses[br.from].vmax);
        const double vj = 0.5 * (net.buses[br.to].vmin + net.buses[br.to].vmax);
        auto& pt = s.branch_point[b];
        pt = {vi, vj, 0.0, 0.0, 0.0, 0.0};
        const BranchFlows f = branch_flows(br.y, vi, vj, 0.0, 0.0);
        const double vals[8] = {f.pij, f.qij, f.pji, f.qji,
                                vi * vi, 0.0, vj * vj, 0.0};
        for (int k = 0; k < 8; ++k) {
            const int row = layout.branch_row(static_cast<int>(b),
                                              static_cast<BranchRow>(k));
            s.x[row] = s.xbar[row] = vals[k];
        }
        if (br.limited()) {
            const double rt = config.limit_tighten * br.rate;
            pt[4] = std::clamp(-(f.pij * f.pij + f.qij * f.qij), -rt * rt, 0.0);
            pt[5] = std::clamp(-(f.pji * f.pji + f.qji * f.qji), -rt * rt, 0.0);
        }
    }
    return s;
}

Solution extract_solution(const PowerNetwork& net, const CouplingLayout& layout,
                          const AdmmState& state) {
    Solution sol;
    sol.pg.resize(net.generators.size());
    sol.qg.resize(net.generators.size());
    for (size_t g = 0; g < net.generators.size(); ++g) {
        sol.pg[g] = state.x[layout.gen_p_row(static_cast<int>(g))];
        sol.qg[g] = state.x[layout.gen_q_row(static_cast<int>(g))];
    }
    sol.vm.resize(net.buses.size());
    sol.va.resize(net.buses.size());
    for (size_t i = 0; i < net.buses.size(); ++i) {
        sol.vm[i] = std::sqrt(std::max(0.0, state.bus_w[i]));
        sol.va[i] = state.bus_theta[i];
    }
    sol.flows.resize(net.branches.size());
    for (size_t b = 0; b < net.branches.size(); ++b) {
        const Branch& br = net.branches[b];
        sol.flows[b] = branch_flows(br.y, sol.vm[br.from], sol.vm[br.to],
                                    sol.va[br.from], sol.va[br.to]);
    }
    return sol;
}

QualityMetrics evaluate_solution(const PowerNetwork& net, const Solution& sol) {
    QualityMetrics q;
    constexpr double kTwoPi = 2.0 * std::numbers::pi;

    std::vector<double> pbal(net.buses.size()), qbal(net.buses.size());
    for (size_t i = 0; i < net.buses.size(); ++i) {
        const Bus& bus = net.buses[i];
        const double w = sol.vm[i] * sol.vm[i];
        pbal[i] = -bus.pd - bus.gs * w;
        qbal[i] = -bus.qd + bus.bs * w;
    }
    for (size_t g = 0; g < net.generators.size(); ++g) {
        pbal[net.generators[g].bus] += sol.pg[g];
        qbal[net.generators[g].bus] += sol.qg[g];
        q.objective += net.generators[g].c2 * sol.pg[g] * sol.pg[g] +
                       net.generators[g].c1 * sol.pg[g] + net.generators[g].c0;
    }
    for (size_t b = 0; b < net.branches.size(); ++b) {
        const Branch& br = net.branches[b];
        const BranchFlows& f = sol.flows[b];
        pbal[br.from] -= f.pij;
        qbal[br.from] -= f.qij;
        pbal[br.to] -= f.pji;
        qbal[br.to] -= f.qji;
        if (br.limited()) {
            q.limit_violation = std::max(
                {q.limit_violation,
                 std::hypot(f.pij, f.qij) - br.rate,
                 std::hypot(f.pji, f.qji) - br.rate});
        }
    }
    q.limit_violation = std::max(0.0, q.limit_violation);
    q.balance_inf = std::max(inf_norm(pbal), inf_norm(qbal));

    for (size_t g = 0; g < net.generators.size(); ++g) {
        const Generator& gen = net.generators[g];
        q.bound_violation = std::max(
            {q.bound_violation, gen.pmin - sol.pg[g], sol.pg[g] - gen.pmax,
             gen.qmin - sol.qg[g], sol.qg[g] - gen.qmax});
    }
    for (size_t i = 0; i < net.buses.size(); ++i) {
        const Bus& bus = net.buses[i];
        q.bound_violation = std::max(
            {q.bound_violation, bus.vmin - sol.vm[i], sol.vm[i] - bus.vmax,
             std::abs(sol.va[i]) - kTwoPi});
    }
    q.bound_violation = std::max(0.0, q.bound_violation);
    q.c_inf = std::max({q.balance_inf, q.limit_violation, q.bound_violation});
    return q;
}

SolveReport solve(const PowerNetwork& net, const SolverConfig& config,
                  const AdmmState* initial, AdmmState* final_state) {
    const auto t0 = Clock::now();
    const CouplingLayout layout = build_layout(net);
    AdmmState state = initial ? *initial : cold_start(net, layout, config);

    SolveReport report;
    const double inner_tol = config.effective_inner_tol(layout.size());
    std::vector<double> xbar_prev;
    std::vector<double> z_prev;
    double prev_z_inf = -1.0;

    for (int outer = 1; outer <= config.max_outer; ++outer) {
        report.outer_iterations = outer;
        bool inner_converged = false;
        for (int inner = 1; inner <= config.max_inner; ++inner) {
            auto tp = Clock::now();
            solve_generators(state, net, layout);
            const BranchSolveStats bstats = solve_branch_batch(
                state, net, layout, config.tron, config.workers,
                config.limit_tighten);
            report.branch_solve_failures += bstats.failures;
            report.phase_times.x_s += seconds_since(tp);

            tp = Clock::now();
            xbar_prev = state.xbar;
            solve_buses(state, net, layout, config.workers);
            report.phase_times.xbar_s += seconds_since(tp);

            tp = Clock::now();
            z_prev = state.z;
            solve_z(state, layout);
            report.phase_times.z_s += seconds_since(tp);

            tp = Clock::now();
            update_y(state, layout);
            report.phase_times.y_s += seconds_since(tp);

            const ResidualNorms primal = primal_residual(state, layout);
            double dual = 0.0;
            double rho_max = 0.0;
            for (size_t k = 0; k < state.xbar.size(); ++k) {
                dual = std::max(dual, std::abs(state.xbar[k] - xbar_prev[k]));
                rho_max = std::max(rho_max, state.rho[k]);
            }
            dual *= rho_max;
            const double z_inf = inf_norm(state.z);

            ++report.inner_iterations;
            ++state.inner_iterations;
            report.series.push_back({outer, inner, primal.norm_inf, dual, z_inf,
                                     seconds_since(t0)});

            if (!std::isfinite(primal.norm_inf) || !std::isfinite(dual) ||
                primal.norm_inf > config.divergence_threshold ||
                dual > config.divergence_threshold) {
                report.status = SolveStatus::Diverged;
                report.diagnostic =
                    "residual norm exceeded divergence threshold at outer " +
                    std::to_string(outer) + " inner " + std::to_string(inner);
                report.solution = extract_solution(net, layout, state);
                report.quality = evaluate_solution(net, report.solution);
                if (final_state) *final_state = state;
                return report;
            }
            if (std::max(primal.norm_inf, dual) <= inner_tol) {
                inner_converged = true;
                break;
            }
            // Early exit: once z meets the outer tolerance and has stopped
            // moving while the primal residual is within the inner tolerance,
            // the outer test is already decided; further inner polishing only
            // chases the slow multiplier tail.
            double z_drift = 0.0;
            for (size_t k = 0; k < state.z.size(); ++k)
                z_drift = std::max(z_drift, std::abs(state.z[k] - z_prev[k]));
            if (primal.norm_inf <= inner_tol && z_inf <= config.eps &&
                z_drift <= 0.01 * config.eps) {
                inner_converged = true;
                break;
            }
        }
        (void)inner_converged;

        const double z_inf = inf_norm(state.z);
        ++state.outer_iterations;
        if (z_inf <= config.eps) {
            // Converged: leave lambda/beta untouched so the final state is a
            // fixed point of the loop (a warm restart terminates immediately).
            report.status = SolveStatus::Converged;
            break;
        }
        OuterSchedule schedule;
        schedule.lambda_min = config.lambda_min;
        schedule.lambda_max = config.lambda_max;
        schedule.beta_growth = config.beta_growth;
        schedule.beta_shrink_trigger = config.beta_shrink_trigger;
        schedule.beta_max = config.beta_max;
        update_outer(state, schedule, z_inf, prev_z_inf);
        prev_z_inf = z_inf;
    }

    report.solution = extract_solution(net, layout, state);
    report.quality = evaluate_solution(net, report.solution);
    if (final_state) *final_state = state;
    return report;
}

}  // namespace gridadmm
