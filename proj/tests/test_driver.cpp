#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "driver.hpp"

using namespace gridadmm;

namespace {

PowerNetwork load(const std::string& name) {
    return load_case(std::string(GRIDADMM_DATA_DIR) + "/" + name);
}

double reference_objective(const std::string& key) {
    std::ifstream in(std::string(GRIDADMM_FIXTURE_DIR) + "/reference.json");
    REQUIRE(in.good());
    nlohmann::json j;
    in >> j;
    return j.at(key).at("objective").get<double>();
}

SolverConfig tuned() {
    SolverConfig cfg;
    cfg.rho_pq = 100.0;
    cfg.rho_va = 10000.0;
    cfg.eps = 1e-5;
    cfg.max_inner = 1000;
    return cfg;
}

// One generator feeding its own load exactly; feasible by construction.
PowerNetwork single_bus_net() {
    PowerNetwork net;
    net.buses.resize(1);
    Bus& bus = net.buses[0];
    bus.id = 1;
    bus.type = BusType::Ref;
    bus.pd = 0.8;
    bus.qd = 0.1;
    bus.vmin = 0.95;
    bus.vmax = 1.05;
    net.ref_bus = 0;
    Generator g;
    g.bus = 0;
    g.pmin = 0.0;
    g.pmax = 2.0;
    g.qmin = -1.0;
    g.qmax = 1.0;
    g.c2 = 10.0;
    g.c1 = 5.0;
    g.c0 = 1.0;
    net.generators.push_back(g);
    bus.gens.push_back(0);
    net.bus_index[1] = 0;
    return net;
}

}  // namespace

TEST_CASE("cold start: mid-bound dispatch, flat voltages, consistent copies") {
    const PowerNetwork net = load("case9.m");
    const CouplingLayout layout = build_layout(net);
    const SolverConfig cfg = tuned();
    const AdmmState s = cold_start(net, layout, cfg);

    for (size_t g = 0; g < net.generators.size(); ++g) {
        const Generator& gen = net.generators[g];
        const int pr = layout.gen_p_row(static_cast<int>(g));
        CHECK(s.x[pr] == 0.5 * (gen.pmin + gen.pmax));
        CHECK(s.x[pr] == s.xbar[pr]);
    }
    for (size_t i = 0; i < net.buses.size(); ++i) {
        const double v = 0.5 * (net.buses[i].vmin + net.buses[i].vmax);
        CHECK(s.bus_w[i] == v * v);
        CHECK(s.bus_theta[i] == 0.0);
    }
    // x and xbar agree on every branch row, so the primal residual is zero
    // (z and y both start at zero).
    const ResidualNorms r = primal_residual(s, layout);
    CHECK(r.norm_inf == 0.0);
    CHECK(s.beta == cfg.beta0);

    // slack seeds stay inside the tightened bounds
    for (size_t b = 0; b < net.branches.size(); ++b) {
        if (!net.branches[b].limited()) continue;
        const double rt = cfg.limit_tighten * net.branches[b].rate;
        CHECK(s.branch_point[b][4] >= -rt * rt);
        CHECK(s.branch_point[b][4] <= 0.0);
    }

    // deterministic: two constructions are bit-identical
    const AdmmState t = cold_start(net, layout, cfg);
    CHECK(std::memcmp(s.x.data(), t.x.data(), s.x.size() * sizeof(double)) == 0);
}

TEST_CASE("evaluate_solution: zero on an exactly feasible point") {
    const PowerNetwork net = single_bus_net();
    Solution sol;
    sol.pg = {0.8};
    sol.qg = {0.1};
    sol.vm = {1.0};
    sol.va = {0.0};
    const QualityMetrics q = evaluate_solution(net, sol);
    CHECK(q.balance_inf == doctest::Approx(0.0));
    CHECK(q.limit_violation == 0.0);
    CHECK(q.bound_violation == 0.0);
    CHECK(q.c_inf == doctest::Approx(0.0));
    CHECK(q.objective == doctest::Approx(10.0 * 0.64 + 5.0 * 0.8 + 1.0));
}

TEST_CASE("evaluate_solution: violations are measured, not hidden") {
    const PowerNetwork net = single_bus_net();
    Solution sol;
    sol.pg = {0.8 + 1e-3};  // 1e-3 real-power surplus
    sol.qg = {0.1};
    sol.vm = {1.0};
    sol.va = {0.0};
    QualityMetrics q = evaluate_solution(net, sol);
    CHECK(q.balance_inf == doctest::Approx(1e-3));
    CHECK(q.c_inf == doctest::Approx(1e-3));

    sol.pg = {2.5};  // above pmax = 2.0
    q = evaluate_solution(net, sol);
    CHECK(q.bound_violation == doctest::Approx(0.5));

    sol.pg = {0.8};
    sol.vm = {0.90};  // below vmin = 0.95
    q = evaluate_solution(net, sol);
    CHECK(q.bound_violation == doctest::Approx(0.05));
}

TEST_CASE("case2 solves to the reference objective") {
    const PowerNetwork net = load("case2.m");
    const SolveReport rep = solve(net, tuned());
    CHECK(rep.status == SolveStatus::Converged);
    CHECK(rep.quality.c_inf <= 1e-3);
    const double ref = reference_objective("case2");
    CHECK(std::abs(rep.quality.objective - ref) / ref <= 5e-3);
}

TEST_CASE("case9 solves to the reference objective with small violations") {
    const PowerNetwork net = load("case9.m");
    AdmmState final_state;
    const SolveReport rep = solve(net, tuned(), nullptr, &final_state);
    CHECK(rep.status == SolveStatus::Converged);
    CHECK(rep.quality.c_inf <= 1e-3);
    CHECK(rep.quality.limit_violation == 0.0);
    const double ref = reference_objective("case9");
    CHECK(std::abs(rep.quality.objective - ref) / ref <= 5e-3);

    // the iteration series is complete and monotone in time
    CHECK(static_cast<int>(rep.series.size()) == rep.inner_iterations);
    for (size_t k = 1; k < rep.series.size(); ++k)
        CHECK(rep.series[k].elapsed_s >= rep.series[k - 1].elapsed_s);

    SUBCASE("warm restart from the converged state is a fixed point") {
        const SolveReport again = solve(net, tuned(), &final_state);
        CHECK(again.status == SolveStatus::Converged);
        CHECK(again.outer_iterations == 1);
        CHECK(again.inner_iterations <= 2);
        CHECK(std::abs(again.quality.objective - rep.quality.objective) <=
              1e-5 * ref);
    }
}

TEST_CASE("solver is bit-identical across worker counts") {
    const PowerNetwork net = load("case9.m");
    SolverConfig cfg = tuned();
    cfg.max_outer = 2;
    cfg.max_inner = 40;  // truncated run: determinism, not quality

    auto run = [&](int workers) {
        cfg.workers = workers;
        AdmmState fs;
        solve(net, cfg, nullptr, &fs);
        return fs;
    };
    const AdmmState a = run(1);
    const AdmmState b = run(8);
    CHECK(std::memcmp(a.x.data(), b.x.data(), a.x.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(a.xbar.data(), b.xbar.data(),
                      a.xbar.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(a.y.data(), b.y.data(), a.y.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(a.lambda.data(), b.lambda.data(),
                      a.lambda.size() * sizeof(double)) == 0);
}

TEST_CASE("iteration limit is reported honestly") {
    const PowerNetwork net = load("case9.m");
    SolverConfig cfg = tuned();
    cfg.max_outer = 1;
    cfg.max_inner = 3;
    const SolveReport rep = solve(net, cfg);
    CHECK(rep.status == SolveStatus::IterationLimit);
    CHECK(rep.inner_iterations == 3);
    CHECK(rep.outer_iterations == 1);
}

TEST_CASE("per-outer z floor is non-increasing over outer iterations") {
    const PowerNetwork net = load("case9.m");
    SolverConfig cfg = tuned();
    cfg.eps = 1e-6;  // force several outer iterations
    cfg.max_outer = 6;
    cfg.max_inner = 200;
    const SolveReport rep = solve(net, cfg);
    REQUIRE(rep.series.size() > 0);

    // the best ||z||_inf reached by each outer iteration should trend down;
    // allow no increase beyond 2x between consecutive outers
    double prev_best = -1.0;
    int cur_outer = rep.series.front().outer;
    double best = 1e30;
    for (const IterationRecord& rec : rep.series) {
        if (rec.outer != cur_outer) {
            if (prev_best >= 0.0) CHECK(best <= 2.0 * prev_best);
            prev_best = best;
            best = 1e30;
            cur_outer = rec.outer;
        }
        best = std::min(best, rec.z_norm);
    }
}
