#include "tracking.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace gridadmm {

namespace {

PowerNetwork scaled_network(const PowerNetwork& base,
                            const TrackingScenario& scenario, int period) {
    PowerNetwork net = base;
    const bool per_bus = static_cast<size_t>(period) < scenario.per_bus.size() &&
                         !scenario.per_bus[period].empty();
    for (size_t i = 0; i < net.buses.size(); ++i) {
        const double mult = per_bus ? scenario.per_bus[period][i]
                                    : scenario.multipliers[period];
        net.buses[i].pd *= mult;
        net.buses[i].qd *= mult;
    }
    return net;
}

}  // namespace

std::vector<PeriodReport> run_tracking(const PowerNetwork& net,
                                       const SolverConfig& config,
                                       const TrackingScenario& scenario) {
    if (scenario.periods() == 0)
        throw std::invalid_argument("tracking scenario has no periods");
    for (size_t t = 0; t < scenario.per_bus.size(); ++t) {
        if (!scenario.per_bus[t].empty() &&
            scenario.per_bus[t].size() != net.buses.size())
            throw std::invalid_argument("per-bus multiplier row size mismatch");
    }

    std::vector<PeriodReport> reports;
    reports.reserve(scenario.periods());
    AdmmState state;
    std::vector<double> prev_pg;

    for (int t = 0; t < scenario.periods(); ++t) {
        PowerNetwork period_net = scaled_network(net, scenario, t);
        if (t > 0) {
            const CouplingLayout layout = build_layout(period_net);
            for (size_t g = 0; g < period_net.generators.size(); ++g) {
                Generator& gen = period_net.generators[g];
                const double rg = scenario.ramp_fraction * gen.pmax;
                const double lo = std::max(gen.pmin, prev_pg[g] - rg);
                const double hi = std::min(gen.pmax, prev_pg[g] + rg);
                if (lo > hi)
                    throw RampError(
                        t + 1, static_cast<int>(g),
                        "empty ramp window for generator " + std::to_string(g) +
                            " in period " + std::to_string(t + 1) + ": [" +
                            std::to_string(lo) + ", " + std::to_string(hi) + "]");
                gen.pmin = lo;
                gen.pmax = hi;
            }
            // Re-project the carried generator iterates into the new window.
            for (size_t g = 0; g < period_net.generators.size(); ++g) {
                const int pr = layout.gen_p_row(static_cast<int>(g));
                const Generator& gen = period_net.generators[g];
                state.x[pr] = std::clamp(state.x[pr], gen.pmin, gen.pmax);
                state.xbar[pr] = std::clamp(state.xbar[pr], gen.pmin, gen.pmax);
            }
            if (config.warm_beta_cap > 0.0)
                state.beta = std::min(state.beta, config.warm_beta_cap);
        }

        const auto tp = std::chrono::steady_clock::now();
        PeriodReport pr;
        pr.period = t + 1;
        pr.report = solve(period_net, config, t > 0 ? &state : nullptr, &state);
        pr.time_s = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - tp)
                        .count();

        prev_pg = pr.report.solution.pg;
        reports.push_back(std::move(pr));
    }
    return reports;
}

std::vector<double> interpolate_profile(const std::vector<double>& hourly,
                                        int minutes_per_step) {
    if (hourly.empty()) throw std::invalid_argument("empty demand series");
    if (minutes_per_step <= 0)
        throw std::invalid_argument("minutes_per_step must be positive");
    if (hourly.front() == 0.0)
        throw std::invalid_argument("first demand value must be nonzero");

    std::vector<double> out;
    if (hourly.size() == 1) {
        out.push_back(1.0);
        return out;
    }
    const int total_minutes = static_cast<int>(hourly.size() - 1) * 60;
    for (int minute = 0; minute <= total_minutes; minute += minutes_per_step) {
        const int hour = std::min<int>(minute / 60,
                                       static_cast<int>(hourly.size()) - 2);
        const double frac = (minute - 60 * hour) / 60.0;
        const double value =
            hourly[hour] + frac * (hourly[hour + 1] - hourly[hour]);
        out.push_back(value / hourly.front());
    }
    return out;
}

TrackingScenario load_profile_csv(const std::string& path,
                                  const PowerNetwork& net) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open profile file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty profile file: " + path);
    auto split = [](const std::string& s) {
        std::vector<std::string> fields;
        std::stringstream ss(s);
        std::string f;
        while (std::getline(ss, f, ',')) {
            f.erase(0, f.find_first_not_of(" \t\r"));
            f.erase(f.find_last_not_of(" \t\r") + 1);
            fields.push_back(f);
        }
        return fields;
    };
    const std::vector<std::string> header = split(line);
    bool per_bus_mode;
    if (header.size() == 2 && header[0] == "period" && header[1] == "multiplier") {
        per_bus_mode = false;
    } else if (header.size() == 3 && header[0] == "period" &&
               header[1] == "bus" && header[2] == "multiplier") {
        per_bus_mode = true;
    } else {
        throw ParseError("unrecognized profile header: " + line);
    }

    std::map<int, double> uniform;
    std::map<int, std::vector<double>> table;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const std::vector<std::string> fields = split(line);
        if (fields.empty() || (fields.size() == 1 && fields[0].empty())) continue;
        try {
            if (!per_bus_mode) {
                if (fields.size() != 2) throw std::invalid_argument("field count");
                uniform[std::stoi(fields[0])] = std::stod(fields[1]);
            } else {
                if (fields.size() != 3) throw std::invalid_argument("field count");
                const int period = std::stoi(fields[0]);
                const int bus = std::stoi(fields[1]);
                const auto it = net.bus_index.find(bus);
                if (it == net.bus_index.end())
                    throw std::invalid_argument("unknown bus " +
                                                std::to_string(bus));
                auto& row = table[period];
                row.resize(net.buses.size(), 1.0);
                row[it->second] = std::stod(fields[2]);
            }
        } catch (const std::exception& e) {
            throw ParseError("profile line " + std::to_string(lineno) + ": " +
                             e.what());
        }
    }

    const auto& keys = per_bus_mode ? [&] {
        std::map<int, double> k;
        for (const auto& [p, _] : table) k[p] = 1.0;
        return k;
    }() : uniform;
    if (keys.empty()) throw ParseError("profile has no data rows: " + path);
    const int periods = static_cast<int>(keys.size());
    for (int t = 1; t <= periods; ++t) {
        if (!keys.count(t))
            throw ParseError("profile periods must be contiguous 1..T; missing " +
                             std::to_string(t));
    }

    TrackingScenario scenario;
    scenario.multipliers.resize(periods, 1.0);
    if (per_bus_mode) {
        scenario.per_bus.resize(periods);
        for (auto& [period, row] : table)
            scenario.per_bus[period - 1] = std::move(row);
    } else {
        for (const auto& [period, mult] : uniform)
            scenario.multipliers[period - 1] = mult;
    }
    return scenario;
}

}  // namespace gridadmm
