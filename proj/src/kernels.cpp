#include "kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "parallel.hpp"

namespace gridadmm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kLtBound = 1e8;

// Value, 4-gradient and 4x4 Hessian (over vi, vj, thi, thj) of one scalar.
struct Quad4 {
    double v = 0.0;
    std::array<double, 4> g{};
    std::array<double, 16> h{};
};

// The four basis functions wi, wj, wr, wim and their derivatives.
struct Basis {
    Quad4 wi, wj, wr, wim;

    explicit Basis(const double* x) {
        const double vi = x[0], vj = x[1];
        const double c = std::cos(x[2] - x[3]);
        const double s = std::sin(x[2] - x[3]);

        wi.v = vi * vi;
        wi.g = {2 * vi, 0, 0, 0};
        wi.h[0] = 2.0;

        wj.v = vj * vj;
        wj.g = {0, 2 * vj, 0, 0};
        wj.h[5] = 2.0;

        wr.v = vi * vj * c;
        wr.g = {vj * c, vi * c, -vi * vj * s, vi * vj * s};
        set_sym(wr.h, 0, 1, c);
        set_sym(wr.h, 0, 2, -vj * s);
        set_sym(wr.h, 0, 3, vj * s);
        set_sym(wr.h, 1, 2, -vi * s);
        set_sym(wr.h, 1, 3, vi * s);
        wr.h[2 * 4 + 2] = -vi * vj * c;
        wr.h[3 * 4 + 3] = -vi * vj * c;
        set_sym(wr.h, 2, 3, vi * vj * c);

        wim.v = vi * vj * s;
        wim.g = {vj * s, vi * s, vi * vj * c, -vi * vj * c};
        set_sym(wim.h, 0, 1, s);
        set_sym(wim.h, 0, 2, vj * c);
        set_sym(wim.h, 0, 3, -vj * c);
        set_sym(wim.h, 1, 2, vi * c);
        set_sym(wim.h, 1, 3, -vi * c);
        wim.h[2 * 4 + 2] = -vi * vj * s;
        wim.h[3 * 4 + 3] = -vi * vj * s;
        set_sym(wim.h, 2, 3, vi * vj * s);
    }

    static void set_sym(std::array<double, 16>& h, int i, int j, double v) {
        h[i * 4 + j] = v;
        h[j * 4 + i] = v;
    }
};

Quad4 combine(const Quad4& a, double ca, const Quad4& b, double cb,
              const Quad4& c, double cc) {
    Quad4 out;
    out.v = ca * a.v + cb * b.v + cc * c.v;
    for (int i = 0; i < 4; ++i)
        out.g[i] = ca * a.g[i] + cb * b.g[i] + cc * c.g[i];
    for (int i = 0; i < 16; ++i)
        out.h[i] = ca * a.h[i] + cb * b.h[i] + cc * c.h[i];
    return out;
}

// Flows in BranchRow order pij, qij, pji, qji.
std::array<Quad4, 4> flow_quads(const BranchAdmittance& y, const Basis& b) {
    return {combine(b.wi, y.gii, b.wr, y.gij, b.wim, y.bij),
            combine(b.wi, -y.bii, b.wr, -y.bij, b.wim, y.gij),
            combine(b.wj, y.gjj, b.wr, y.gji, b.wim, -y.bji),
            combine(b.wj, -y.bjj, b.wr, -y.bji, b.wim, -y.gji)};
}

}  // namespace

BranchProblem::BranchProblem(const Branch& branch, double vmin_i, double vmax_i,
                             double vmin_j, double vmax_j, double rate_tightened)
    : y_(branch.y), limited_(branch.limited()) {
    lower_ = {vmin_i, vmin_j, -kTwoPi, -kTwoPi, 0.0, 0.0};
    upper_ = {vmax_i, vmax_j, kTwoPi, kTwoPi, 0.0, 0.0};
    if (limited_) {
        const double r2 = rate_tightened * rate_tightened;
        lower_[4] = -r2;
        lower_[5] = -r2;
    }
}

void BranchProblem::eval(const double* x, double* f, double* g, double* h) const {
    const int n = dim();
    if (f) *f = 0.0;
    if (g) std::fill(g, g + n, 0.0);
    if (h) std::fill(h, h + n * n, 0.0);

    const Basis basis(x);
    const auto flows = flow_quads(y_, basis);

    // e_k in row order: four flows, wi, thi, wj, thj.
    auto accumulate = [&](const Quad4& e, int row) {
        const double d = e.v - target[row] + z[row];
        const double w = y[row] + rho[row] * d;
        if (f) *f += y[row] * d + 0.5 * rho[row] * d * d;
        if (g)
            for (int i = 0; i < 4; ++i) g[i] += w * e.g[i];
        if (h)
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j)
                    h[i * n + j] += w * e.h[i * 4 + j] + rho[row] * e.g[i] * e.g[j];
    };
    for (int k = 0; k < 4; ++k) accumulate(flows[k], k);
    accumulate(basis.wi, kRowWi);
    accumulate(basis.wj, kRowWj);
    {   // angle rows are linear: e = thi (or thj)
        for (int row : {kRowThi, kRowThj}) {
            const int i = row == kRowThi ? 2 : 3;
            const double d = x[i] - target[row] + z[row];
            if (f) *f += y[row] * d + 0.5 * rho[row] * d * d;
            if (g) g[i] += y[row] + rho[row] * d;
            if (h) h[i * n + i] += rho[row];
        }
    }

    if (!limited_) return;

    // h_dir = p^2 + q^2 + s, one per direction, with multiplier lt and
    // penalty rho_t.
    auto limit_term = [&](const Quad4& p, const Quad4& q, int srow, double lt) {
        const double res = p.v * p.v + q.v * q.v + x[srow];
        const double w = lt + rho_t * res;
        if (f) *f += lt * res + 0.5 * rho_t * res * res;
        std::array<double, 6> gr{};  // gradient of the residual
        for (int i = 0; i < 4; ++i) gr[i] = 2 * p.v * p.g[i] + 2 * q.v * q.g[i];
        gr[srow] = 1.0;
        if (g)
            for (int i = 0; i < n; ++i) g[i] += w * gr[i];
        if (h) {
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j)
                    h[i * n + j] += w * 2.0 *
                        (p.g[i] * p.g[j] + p.v * p.h[i * 4 + j] +
                         q.g[i] * q.g[j] + q.v * q.h[i * 4 + j]);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    h[i * n + j] += rho_t * gr[i] * gr[j];
        }
    };
    limit_term(flows[kRowPij], flows[kRowQij], 4, lt_ij);
    limit_term(flows[kRowPji], flows[kRowQji], 5, lt_ji);
}

double BranchProblem::value(const double* x) const {
    double f;
    eval(x, &f, nullptr, nullptr);
    return f;
}

void BranchProblem::gradient(const double* x, double* g) const {
    eval(x, nullptr, g, nullptr);
}

void BranchProblem::hessian(const double* x, double* h) const {
    eval(x, nullptr, nullptr, h);
}

std::array<double, 8> BranchProblem::consensus_values(const double* x) const {
    const BranchFlows f = branch_flows(y_, x[0], x[1], x[2], x[3]);
    return {f.pij, f.qij, f.pji, f.qji, x[0] * x[0], x[2], x[1] * x[1], x[3]};
}

double BranchProblem::limit_residual_ij(const double* x) const {
    const BranchFlows f = branch_flows(y_, x[0], x[1], x[2], x[3]);
    return f.pij * f.pij + f.qij * f.qij + x[4];
}

double BranchProblem::limit_residual_ji(const double* x) const {
    const BranchFlows f = branch_flows(y_, x[0], x[1], x[2], x[3]);
    return f.pji * f.pji + f.qji * f.qji + x[5];
}

void solve_generators(AdmmState& state, const PowerNetwork& net,
                      const CouplingLayout& layout) {
    for (size_t g = 0; g < net.generators.size(); ++g) {
        const Generator& gen = net.generators[g];
        const int pr = layout.gen_p_row(static_cast<int>(g));
        const int qr = layout.gen_q_row(static_cast<int>(g));
        const double p = (state.rho[pr] * (state.xbar[pr] - state.z[pr]) -
                          state.y[pr] - gen.c1) /
                         (2.0 * gen.c2 + state.rho[pr]);
        state.x[pr] = std::clamp(p, gen.pmin, gen.pmax);
        const double q = (state.rho[qr] * (state.xbar[qr] - state.z[qr]) -
                          state.y[qr]) /
                         state.rho[qr];
        state.x[qr] = std::clamp(q, gen.qmin, gen.qmax);
    }
}

BranchSolveStats solve_branch_batch(AdmmState& state, const PowerNetwork& net,
                                    const CouplingLayout& layout,
                                    const TronSettings& tron, int workers,
                                    double limit_tighten) {
    const size_t nbr = net.branches.size();
    // Per-branch augmented-Lagrangian loop on the line-limit equalities:
    // the limit multipliers must settle within each sweep, otherwise they
    // keep shifting the branch objectives and the bus iterates never rest.
    constexpr int kMaxAlIterations = 10;
    constexpr double kAlTol = 1e-8;          // |p^2 + q^2 + s| feasibility
    constexpr double kAlShrink = 0.25;       // required reduction per AL step
    constexpr double kRhoTildeMax = 1e7;

    std::vector<TronResult> results(nbr);
    parallel_for(nbr, workers, [&](size_t b) {
        const Branch& br = net.branches[b];
        const Bus& bi = net.buses[br.from];
        const Bus& bj = net.buses[br.to];
        BranchProblem prob(br, bi.vmin, bi.vmax, bj.vmin, bj.vmax,
                           limit_tighten * br.rate);
        for (int k = 0; k < 8; ++k) {
            const int row = layout.branch_row(static_cast<int>(b),
                                              static_cast<BranchRow>(k));
            prob.target[k] = state.xbar[row];
            prob.y[k] = state.y[row];
            prob.z[k] = state.z[row];
            prob.rho[k] = state.rho[row];
        }
        prob.lt_ij = state.lt_ij[b];
        prob.lt_ji = state.lt_ji[b];
        prob.rho_t = state.rho_tilde[b];

        const std::array<double, 6> previous = state.branch_point[b];
        double* pt = state.branch_point[b].data();
        TronResult result;
        if (!prob.limited()) {
            result = solve_one(prob, pt, tron);
        } else {
            double prev_res = std::numeric_limits<double>::infinity();
            for (int it = 0; it < kMaxAlIterations; ++it) {
                const TronResult r = solve_one(prob, pt, tron);
                result.iterations += r.iterations;
                result.objective = r.objective;
                result.projected_gradient = r.projected_gradient;
                if (r.status == TronStatus::NumericalError) {
                    result.status = r.status;
                    break;
                }
                const double rij = prob.limit_residual_ij(pt);
                const double rji = prob.limit_residual_ji(pt);
                const double res = std::max(std::abs(rij), std::abs(rji));
                if (res <= kAlTol) break;
                prob.lt_ij =
                    std::clamp(prob.lt_ij + prob.rho_t * rij, -kLtBound, kLtBound);
                prob.lt_ji =
                    std::clamp(prob.lt_ji + prob.rho_t * rji, -kLtBound, kLtBound);
                if (res > kAlShrink * prev_res)
                    prob.rho_t = std::min(10.0 * prob.rho_t, kRhoTildeMax);
                prev_res = res;
            }
        }
        results[b] = result;
        if (result.status == TronStatus::NumericalError)
            state.branch_point[b] = previous;  // keep last good point
        state.lt_ij[b] = prob.lt_ij;
        state.lt_ji[b] = prob.lt_ji;
        state.rho_tilde[b] = prob.rho_t;
        const auto vals = prob.consensus_values(state.branch_point[b].data());
        for (int k = 0; k < 8; ++k)
            state.x[layout.branch_row(static_cast<int>(b),
                                      static_cast<BranchRow>(k))] = vals[k];
    });

    BranchSolveStats stats;
    for (size_t b = 0; b < nbr; ++b) {
        if (results[b].status == TronStatus::NumericalError) ++stats.failures;
        stats.tron_iterations += results[b].iterations;
        stats.max_projected_gradient = std::max(stats.max_projected_gradient,
                                                results[b].projected_gradient);
    }
    return stats;
}

void solve_buses(AdmmState& state, const PowerNetwork& net,
                 const CouplingLayout& layout, int workers) {
    std::vector<int> singular(net.buses.size(), -1);
    parallel_for(net.buses.size(), workers, [&](size_t i) {
        const Bus& bus = net.buses[i];
        const auto& rows = layout.bus_rows(static_cast<int>(i));
        const bool fix_theta = static_cast<int>(i) == net.ref_bus;

        // Variables: [0] = w, [1] = theta, then one duplicate per row in
        // gen_p, gen_q, flow_p, flow_q order.  Q is diagonal.
        const size_t ndup = rows.gen_p.size() + rows.gen_q.size() +
                            rows.flow_p.size() + rows.flow_q.size();
        const size_t nv = 2 + ndup;
        std::vector<double> qdiag(nv, 0.0), c(nv, 0.0);
        std::vector<int> dup_rows;
        dup_rows.reserve(ndup);

        for (int row : rows.w) {
            qdiag[0] += state.rho[row];
            c[0] += state.rho[row] * (state.x[row] + state.z[row]) + state.y[row];
        }
        for (int row : rows.theta) {
            qdiag[1] += state.rho[row];
            c[1] += state.rho[row] * (state.x[row] + state.z[row]) + state.y[row];
        }
        auto add_dup = [&](int row) {
            const size_t v = 2 + dup_rows.size();
            dup_rows.push_back(row);
            qdiag[v] = state.rho[row];
            c[v] = state.rho[row] * (state.x[row] + state.z[row]) + state.y[row];
        };
        for (int row : rows.gen_p) add_dup(row);
        for (int row : rows.gen_q) add_dup(row);
        for (int row : rows.flow_p) add_dup(row);
        for (int row : rows.flow_q) add_dup(row);

        // A bus touched by no branch has no w/theta consensus rows; give the
        // originals a tiny regularization so Q stays positive definite (the
        // balance rows still pin the duplicates).
        if (qdiag[0] == 0.0) qdiag[0] = 1.0;
        if (qdiag[1] == 0.0) qdiag[1] = 1.0;

        // Equality rows: real balance, reactive balance, optionally theta = 0.
        const int nc = fix_theta ? 3 : 2;
        std::vector<double> A(nc * nv, 0.0);
        double b[3] = {bus.pd, bus.qd, 0.0};
        A[0 * nv + 0] = -bus.gs;
        A[1 * nv + 0] = bus.bs;
        if (fix_theta) A[2 * nv + 1] = 1.0;
        size_t v = 2;
        for (size_t k = 0; k < rows.gen_p.size(); ++k, ++v) A[0 * nv + v] = 1.0;
        for (size_t k = 0; k < rows.gen_q.size(); ++k, ++v) A[1 * nv + v] = 1.0;
        for (size_t k = 0; k < rows.flow_p.size(); ++k, ++v) A[0 * nv + v] = -1.0;
        for (size_t k = 0; k < rows.flow_q.size(); ++k, ++v) A[1 * nv + v] = -1.0;

        // S = A Q^-1 A^T (nc x nc), rhs = A Q^-1 c - b
        double S[9] = {0}, rhs[3] = {0};
        for (int r = 0; r < nc; ++r) {
            for (int s = 0; s < nc; ++s) {
                double acc = 0.0;
                for (size_t j = 0; j < nv; ++j)
                    acc += A[r * nv + j] * A[s * nv + j] / qdiag[j];
                S[r * 3 + s] = acc;
            }
            double acc = 0.0;
            for (size_t j = 0; j < nv; ++j) acc += A[r * nv + j] * c[j] / qdiag[j];
            rhs[r] = acc - b[r];
        }

        // Gaussian elimination with partial pivoting on the small system.
        double mu[3] = {0};
        {
            int piv[3] = {0, 1, 2};
            for (int col = 0; col < nc; ++col) {
                int best = col;
                for (int r = col + 1; r < nc; ++r)
                    if (std::abs(S[piv[r] * 3 + col]) > std::abs(S[piv[best] * 3 + col]))
                        best = r;
                std::swap(piv[col], piv[best]);
                const double d = S[piv[col] * 3 + col];
                if (std::abs(d) < 1e-14) {
                    singular[i] = static_cast<int>(i);
                    return;
                }
                for (int r = col + 1; r < nc; ++r) {
                    const double fctr = S[piv[r] * 3 + col] / d;
                    for (int s2 = col; s2 < nc; ++s2)
                        S[piv[r] * 3 + s2] -= fctr * S[piv[col] * 3 + s2];
                    rhs[piv[r]] -= fctr * rhs[piv[col]];
                }
            }
            for (int col = nc - 1; col >= 0; --col) {
                double acc = rhs[piv[col]];
                for (int s2 = col + 1; s2 < nc; ++s2)
                    acc -= S[piv[col] * 3 + s2] * mu[s2];
                mu[col] = acc / S[piv[col] * 3 + col];
            }
        }

        // xbar = Q^-1 (c - A^T mu)
        std::vector<double> sol(nv);
        for (size_t j = 0; j < nv; ++j) {
            double acc = c[j];
            for (int r = 0; r < nc; ++r) acc -= A[r * nv + j] * mu[r];
            sol[j] = acc / qdiag[j];
        }

        state.bus_w[i] = sol[0];
        state.bus_theta[i] = sol[1];
        for (int row : rows.w) state.xbar[row] = sol[0];
        for (int row : rows.theta) state.xbar[row] = sol[1];
        for (size_t k = 0; k < dup_rows.size(); ++k)
            state.xbar[dup_rows[k]] = sol[2 + k];
    });
    for (size_t i = 0; i < singular.size(); ++i)
        if (singular[i] >= 0)
            throw SingularBusError(net.buses[i].id,
                                   "isolated bus " + std::to_string(net.buses[i].id) +
                                   ": singular balance system");
}

void solve_z(AdmmState& state, const CouplingLayout& layout) {
    const int m = layout.size();
    for (int k = 0; k < m; ++k) {
        const double r = state.x[k] - state.xbar[k];
        state.z[k] = -(state.lambda[k] + state.y[k] + state.rho[k] * r) /
                     (state.rho[k] + state.beta);
    }
}

void update_y(AdmmState& state, const CouplingLayout& layout) {
    const int m = layout.size();
    for (int k = 0; k < m; ++k)
        state.y[k] += state.rho[k] * (state.x[k] - state.xbar[k] + state.z[k]);
}

void update_outer(AdmmState& state, const OuterSchedule& schedule,
                  double z_inf, double prev_z_inf) {
    for (size_t k = 0; k < state.lambda.size(); ++k)
        state.lambda[k] = std::clamp(state.lambda[k] + state.beta * state.z[k],
                                     schedule.lambda_min, schedule.lambda_max);
    if (prev_z_inf >= 0.0 && z_inf > schedule.beta_shrink_trigger * prev_z_inf)
        state.beta = std::min(state.beta * schedule.beta_growth, schedule.beta_max);
}

}  // namespace gridadmm
