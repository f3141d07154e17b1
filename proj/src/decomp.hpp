#ifndef GRIDADMM_DECOMP_HPP
#define GRIDADMM_DECOMP_HPP

#include <array>
#include <cstddef>
#include <vector>

#include "netdata.hpp"

namespace gridadmm {

enum class RhoClass { PQ, VA };

// Offsets of the 8 consensus rows of a branch, in row order.
enum BranchRow {
    kRowPij = 0, kRowQij = 1, kRowPji = 2, kRowQji = 3,
    kRowWi = 4, kRowThi = 5, kRowWj = 6, kRowThj = 7
};

// Flat index map for the coupling rows of Eq. "Ax + Bx\bar + z = 0":
// generators first (p, q per generator), then branches in file order
// (pij, qij, pji, qji, wi, thi, wj, thj per branch).  Every row couples one
// x-side entry (generator/branch copy) with one bus-side entry.
class CouplingLayout {
public:
    explicit CouplingLayout(const PowerNetwork& net);

    int size() const { return m_; }
    int num_generators() const { return ngen_; }
    int num_branches() const { return nbr_; }

    int gen_p_row(int g) const { return 2 * g; }
    int gen_q_row(int g) const { return 2 * g + 1; }
    int branch_row(int b, BranchRow which) const {
        return 2 * ngen_ + 8 * b + static_cast<int>(which);
    }

    RhoClass row_class(int row) const {
        if (row < 2 * ngen_) return RhoClass::PQ;
        const int r = (row - 2 * ngen_) % 8;
        return r < 4 ? RhoClass::PQ : RhoClass::VA;
    }

    // Rows whose bus-side entry is owned by bus i, split by role in the
    // bus power-balance constraints.
    struct BusRows {
        std::vector<int> gen_p, gen_q;    // +1 coefficient in balance rows
        std::vector<int> flow_p, flow_q;  // -1 coefficient in balance rows
        std::vector<int> w, theta;        // bus originals; shared across rows
    };
    const BusRows& bus_rows(int bus) const { return bus_rows_[bus]; }

private:
    int m_ = 0;
    int ngen_ = 0;
    int nbr_ = 0;
    std::vector<BusRows> bus_rows_;
};

// All iterate vectors of the two-level ADMM.  Vectors x, xbar, z, y, lambda
// and rho have one entry per coupling row; x holds the component-side value
// of each row and xbar the bus-side value.  Bus originals (w_i, theta_i) are
// stored once in bus_w/bus_theta and mirrored into their xbar rows.
struct AdmmState {
    std::vector<double> x, xbar, z, y, lambda, rho;
    double beta = 0.0;

    std::vector<double> bus_w, bus_theta;

    // Per-branch local NLP iterate (vi, vj, thi, thj, sij, sji); the slack
    // entries are unused for unlimited branches.
    std::vector<std::array<double, 6>> branch_point;
    std::vector<double> lt_ij, lt_ji;   // line-limit multipliers
    std::vector<double> rho_tilde;

    int outer_iterations = 0;
    int inner_iterations = 0;   // cumulative over all outer iterations
};

CouplingLayout build_layout(const PowerNetwork& net);

AdmmState make_state(const PowerNetwork& net, const CouplingLayout& layout,
                     double rho_pq, double rho_va, double beta0);

struct ResidualNorms {
    double norm2 = 0.0;
    double norm_inf = 0.0;
};

// r_k = x_k - xbar_k + z_k per row; fills out (length m) when non-null.
ResidualNorms primal_residual(const AdmmState& state, const CouplingLayout& layout,
                              std::vector<double>* out = nullptr);

}  // namespace gridadmm

#endif
