#ifndef GRIDADMM_NETDATA_HPP
#define GRIDADMM_NETDATA_HPP

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace gridadmm {

class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

enum class BusType { PQ = 1, PV = 2, Ref = 3 };

struct Bus {
    int id = 0;          // external bus number
    BusType type = BusType::PQ;
    double pd = 0.0, qd = 0.0;   // load (p.u.)
    double gs = 0.0, bs = 0.0;   // shunt conductance/susceptance (p.u.)
    double vmin = 0.0, vmax = 0.0;
    std::vector<int> gens;            // indices into PowerNetwork::generators
    std::vector<int> from_branches;   // branches with this bus as from-side
    std::vector<int> to_branches;     // branches with this bus as to-side
};

struct Generator {
    int bus = 0;                      // internal bus index
    double pmin = 0.0, pmax = 0.0;
    double qmin = 0.0, qmax = 0.0;
    double c2 = 0.0, c1 = 0.0, c0 = 0.0;  // cost on p.u. power basis
};

// The eight g/b coefficients of the pi-model with complex turns ratio.
struct BranchAdmittance {
    double gii = 0.0, bii = 0.0;
    double gij = 0.0, bij = 0.0;
    double gji = 0.0, bji = 0.0;
    double gjj = 0.0, bjj = 0.0;
};

struct Branch {
    int from = 0, to = 0;             // internal bus indices
    double r = 0.0, x = 0.0;
    double b_charging = 0.0;          // total line-charging susceptance
    double tap = 1.0;                 // turns-ratio magnitude
    double shift = 0.0;               // phase shift (radians)
    double rate = 0.0;                // apparent-power limit (p.u.), 0 = unlimited
    BranchAdmittance y;

    bool limited() const { return rate > 0.0; }
};

struct PowerNetwork {
    double base_mva = 100.0;
    std::vector<Bus> buses;
    std::vector<Generator> generators;
    std::vector<Branch> branches;
    std::unordered_map<int, int> bus_index;  // external number -> internal index
    int ref_bus = -1;
};

// Real/reactive flows of one branch at a voltage point, both directions.
struct BranchFlows {
    double pij = 0.0, qij = 0.0;
    double pji = 0.0, qji = 0.0;
};

BranchAdmittance derive_admittances(double r, double x, double b_charging,
                                    double tap, double shift);

BranchFlows branch_flows(const BranchAdmittance& y, double vi, double vj,
                         double thi, double thj);

PowerNetwork parse_matpower(std::istream& source);
PowerNetwork load_case(const std::string& path);

}  // namespace gridadmm

#endif
