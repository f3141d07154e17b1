#include "outputs.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace gridadmm {

namespace {

const char* status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::Converged: return "converged";
        case SolveStatus::IterationLimit: return "iteration_limit";
        case SolveStatus::Diverged: return "diverged";
    }
    return "unknown";
}

std::ofstream open_or_throw(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write output file: " + path);
    return out;
}

// Shortest round-trip representation so identical runs produce identical text.
std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

double report_gap(double objective, double reference) {
    if (!(reference > 0.0))
        throw std::invalid_argument("reference objective must be positive");
    return std::abs(objective - reference) / reference;
}

std::string solution_json_text(const PowerNetwork& net,
                               const SolveReport& report, double ref_objective) {
    nlohmann::json j;
    j["status"] = status_name(report.status);
    j["outer_iterations"] = report.outer_iterations;
    j["inner_iterations"] = report.inner_iterations;
    j["branch_solve_failures"] = report.branch_solve_failures;
    if (!report.diagnostic.empty()) j["diagnostic"] = report.diagnostic;

    j["metrics"] = {
        {"objective", report.quality.objective},
        {"balance_inf", report.quality.balance_inf},
        {"limit_violation", report.quality.limit_violation},
        {"bound_violation", report.quality.bound_violation},
        {"c_inf", report.quality.c_inf},
    };
    if (ref_objective > 0.0) {
        j["metrics"]["reference_objective"] = ref_objective;
        j["metrics"]["gap"] = report_gap(report.quality.objective, ref_objective);
    }
    j["phase_times_s"] = {
        {"x", report.phase_times.x_s},
        {"xbar", report.phase_times.xbar_s},
        {"z", report.phase_times.z_s},
        {"y", report.phase_times.y_s},
    };

    const Solution& sol = report.solution;
    auto gens = nlohmann::json::array();
    for (size_t g = 0; g < sol.pg.size(); ++g) {
        gens.push_back({{"bus", net.buses[net.generators[g].bus].id},
                        {"pg", sol.pg[g]},
                        {"qg", sol.qg[g]}});
    }
    j["generators"] = gens;

    auto buses = nlohmann::json::array();
    for (size_t i = 0; i < sol.vm.size(); ++i) {
        buses.push_back({{"bus", net.buses[i].id},
                         {"vm", sol.vm[i]},
                         {"va", sol.va[i]}});
    }
    j["buses"] = buses;

    auto branches = nlohmann::json::array();
    for (size_t b = 0; b < sol.flows.size(); ++b) {
        const Branch& br = net.branches[b];
        branches.push_back({{"from", net.buses[br.from].id},
                            {"to", net.buses[br.to].id},
                            {"pij", sol.flows[b].pij},
                            {"qij", sol.flows[b].qij},
                            {"pji", sol.flows[b].pji},
                            {"qji", sol.flows[b].qji}});
    }
    j["branches"] = branches;
    return j.dump(2) + "\n";
}

void write_solution_json(const std::string& path, const PowerNetwork& net,
                         const SolveReport& report, double ref_objective) {
    open_or_throw(path) << solution_json_text(net, report, ref_objective);
}

void write_convergence_csv(const std::string& path,
                           const std::vector<IterationRecord>& series) {
    std::ofstream out = open_or_throw(path);
    out << "outer,inner,primal_res,dual_res,z_norm,elapsed_s\n";
    for (const IterationRecord& r : series) {
        out << r.outer << ',' << r.inner << ',' << fmt(r.primal_res) << ','
            << fmt(r.dual_res) << ',' << fmt(r.z_norm) << ','
            << fmt(r.elapsed_s) << '\n';
    }
}

void write_periods_csv(const std::string& path,
                       const std::vector<PeriodReport>& periods,
                       const std::vector<double>& ref_objectives) {
    std::ofstream out = open_or_throw(path);
    out << "period,inner_iters,time_s,viol_inf,gap\n";
    for (size_t t = 0; t < periods.size(); ++t) {
        const PeriodReport& p = periods[t];
        out << p.period << ',' << p.report.inner_iterations << ','
            << fmt(p.time_s) << ',' << fmt(p.report.quality.c_inf) << ',';
        if (t < ref_objectives.size() && ref_objectives[t] > 0.0)
            out << fmt(report_gap(p.report.quality.objective, ref_objectives[t]));
        else
            out << "nan";
        out << '\n';
    }
}

}  // namespace gridadmm
