#include "decomp.hpp"

#include <cmath>

namespace gridadmm {

CouplingLayout::CouplingLayout(const PowerNetwork& net)
    : ngen_(static_cast<int>(net.generators.size())),
      nbr_(static_cast<int>(net.branches.size())),
      bus_rows_(net.buses.size()) {
    m_ = 2 * ngen_ + 8 * nbr_;

    for (int g = 0; g < ngen_; ++g) {
        auto& rows = bus_rows_[net.generators[g].bus];
        rows.gen_p.push_back(gen_p_row(g));
        rows.gen_q.push_back(gen_q_row(g));
    }
    for (int b = 0; b < nbr_; ++b) {
        const Branch& br = net.branches[b];
        auto& fr = bus_rows_[br.from];
        fr.flow_p.push_back(branch_row(b, kRowPij));
        fr.flow_q.push_back(branch_row(b, kRowQij));
        fr.w.push_back(branch_row(b, kRowWi));
        fr.theta.push_back(branch_row(b, kRowThi));
        auto& to = bus_rows_[br.to];
        to.flow_p.push_back(branch_row(b, kRowPji));
        to.flow_q.push_back(branch_row(b, kRowQji));
        to.w.push_back(branch_row(b, kRowWj));
        to.theta.push_back(branch_row(b, kRowThj));
    }
}

CouplingLayout build_layout(const PowerNetwork& net) {
    return CouplingLayout(net);
}

AdmmState make_state(const PowerNetwork& net, const CouplingLayout& layout,
                     double rho_pq, double rho_va, double beta0) {
    AdmmState s;
    const int m = layout.size();
    s.x.assign(m, 0.0);
    s.xbar.assign(m, 0.0);
    s.z.assign(m, 0.0);
    s.y.assign(m, 0.0);
    s.lambda.assign(m, 0.0);
    s.rho.resize(m);
    for (int k = 0; k < m; ++k)
        s.rho[k] = layout.row_class(k) == RhoClass::PQ ? rho_pq : rho_va;
    s.beta = beta0;
    s.bus_w.assign(net.buses.size(), 0.0);
    s.bus_theta.assign(net.buses.size(), 0.0);
    s.branch_point.assign(net.branches.size(), {0, 0, 0, 0, 0, 0});
    s.lt_ij.assign(net.branches.size(), 0.0);
    s.lt_ji.assign(net.branches.size(), 0.0);
    s.rho_tilde.assign(net.branches.size(), rho_pq);
    return s;
}

ResidualNorms primal_residual(const AdmmState& state, const CouplingLayout& layout,
                              std::vector<double>* out) {
    const int m = layout.size();
    if (out) out->resize(m);
    ResidualNorms n;
    for (int k = 0; k < m; ++k) {
        const double r = state.x[k] - state.xbar[k] + state.z[k];
        if (out) (*out)[k] = r;
        n.norm2 += r * r;
        n.norm_inf = std::max(n.norm_inf, std::abs(r));
    }
    n.norm2 = std::sqrt(n.norm2);
    return n;
}

}  // namespace gridadmm
