#ifndef GRIDADMM_OUTPUTS_HPP
#define GRIDADMM_OUTPUTS_HPP

#include <string>
#include <vector>

#include "driver.hpp"
#include "tracking.hpp"

namespace gridadmm {

// |f - f*| / f*; throws std::invalid_argument for nonpositive f*.
double report_gap(double objective, double reference);

// Writers throw std::runtime_error when the destination cannot be opened.
// A negative ref_objective means "no reference available" (gap omitted).
void write_solution_json(const std::string& path, const PowerNetwork& net,
                         const SolveReport& report, double ref_objective);
void write_convergence_csv(const std::string& path,
                           const std::vector<IterationRecord>& series);
void write_periods_csv(const std::string& path,
                       const std::vector<PeriodReport>& periods,
                       const std::vector<double>& ref_objectives);

std::string solution_json_text(const PowerNetwork& net,
                               const SolveReport& report, double ref_objective);

}  // namespace gridadmm

#endif
