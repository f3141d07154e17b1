#ifndef GRIDADMM_TRACKING_HPP
#define GRIDADMM_TRACKING_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "driver.hpp"
#include "netdata.hpp"

namespace gridadmm {

class RampError : public std::runtime_error {
public:
    RampError(int period, int generator, const std::string& what)
        : std::runtime_error(what), period(period), generator(generator) {}
    int period;
    int generator;
};

// A multi-period load trajectory.  Multipliers scale every bus's pd and qd
// uniformly unless per_bus is populated, in which case per_bus[t][i] scales
// bus i in period t (uniform multipliers are ignored for populated periods).
struct TrackingScenario {
    std::vector<double> multipliers;            // one per period
    std::vector<std::vector<double>> per_bus;   // optional, [period][bus]
    double ramp_fraction = 0.02;                // r_g = fraction * pmax

    int periods() const { return static_cast<int>(multipliers.size()); }
};

struct PeriodReport {
    int period = 0;   // 1-based
    SolveReport report;
    double time_s = 0.0;
};

// Solves each period in sequence: period 1 from cold start, later periods
// warm-started from the previous period's full ADMM state with generator
// p-bounds tightened to the ramp window around the previous dispatch.
// Throws RampError when a ramp window has empty intersection with the
// original bounds.
std::vector<PeriodReport> run_tracking(const PowerNetwork& net,
                                       const SolverConfig& config,
                                       const TrackingScenario& scenario);

// Linear interpolation of an hourly demand series down to `minutes_per_step`
// minute periods, normalized so the first multiplier is 1.  The result spans
// the full series: (hours-1)*60/minutes_per_step + 1 periods.
std::vector<double> interpolate_profile(const std::vector<double>& hourly,
                                        int minutes_per_step);

// CSV with header `period,multiplier` or `period,bus,multiplier`; periods
// must be 1..T contiguous.  Bus column uses external bus numbers and is
// resolved against `net`.
TrackingScenario load_profile_csv(const std::string& path,
                                  const PowerNetwork& net);

}  // namespace gridadmm

#endif
