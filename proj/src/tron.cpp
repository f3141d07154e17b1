#include "tron.hpp"

#include <algorithm>
#include <cmath>

#include "parallel.hpp"

namespace gridadmm {

namespace {

constexpr double kMu0 = 0.01;      // sufficient-decrease factor
constexpr double kEta = 1e-4;      // step acceptance threshold
constexpr double kDeltaMax = 1e10;

double dot(int n, const double* a, const double* b) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double norm2(int n, const double* a) { return std::sqrt(dot(n, a, a)); }

void clip(int n, const double* l, const double* u, double* x) {
    for (int i = 0; i < n; ++i) x[i] = std::clamp(x[i], l[i], u[i]);
}

bool finite(int n, const double* a) {
    for (int i = 0; i < n; ++i)
        if (!std::isfinite(a[i])) return false;
    return true;
}

// q(s) = g's + s'Hs/2
double model(int n, const double* g, const double* h, const double* s) {
    double q = dot(n, g, s);
    for (int i = 0; i < n; ++i) {
        double hs = 0.0;
        for (int j = 0; j < n; ++j) hs += h[i * n + j] * s[j];
        q += 0.5 * s[i] * hs;
    }
    return q;
}

void matvec(int n, const double* h, const double* v, double* out) {
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += h[i * n + j] * v[j];
        out[i] = s;
    }
}

bool cholesky(int n, const double* a, double* l) {
    for (int i = 0; i < n * n; ++i) l[i] = 0.0;
    for (int j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (int k = 0; k < j; ++k) d -= l[j * n + k] * l[j * n + k];
        if (d <= 0.0 || !std::isfinite(d)) return false;
        l[j * n + j] = std::sqrt(d);
        for (int i = j + 1; i < n; ++i) {
            double v = a[i * n + j];
            for (int k = 0; k < j; ++k) v -= l[i * n + k] * l[j * n + k];
            l[i * n + j] = v / l[j * n + j];
        }
    }
    return true;
}

void chol_solve(int n, const double* l, const double* b, double* x) {
    for (int i = 0; i < n; ++i) {
        double v = b[i];
        for (int k = 0; k < i; ++k) v -= l[i * n + k] * x[k];
        x[i] = v / l[i * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
        double v = x[i];
        for (int k = i + 1; k < n; ++k) v -= l[k * n + i] * x[k];
        x[i] = v / l[i * n + i];
    }
}

// Largest tau >= 0 with ||s + tau p|| = delta.
double boundary_tau(int n, const double* s, const double* p, double delta) {
    const double pp = dot(n, p, p);
    if (pp <= 0.0) return 0.0;
    const double sp = dot(n, s, p);
    const double ss = dot(n, s, s);
    const double disc = std::max(0.0, sp * sp + pp * (delta * delta - ss));
    return (-sp + std::sqrt(disc)) / pp;
}

struct Workspace {
    static constexpr int N = BoxNlp::kMaxDim;
    double g[N], h[N * N], s[N], xc[N], d[N], xt[N], st[N];
    double rc[N], p[N], hp[N], prec[N * N], pv[N], r[N];
    int free_idx[N];
};

// Cauchy point: breakpoint/interpolation search along P(x - alpha g) - x.
// Returns alpha; s receives the step.
double cauchy_point(int n, const double* x, const double* g, const double* h,
                    const double* l, const double* u, double delta, double* s) {
    const double gnorm = norm2(n, g);
    if (gnorm == 0.0) {
        std::fill(s, s + n, 0.0);
        return 0.0;
    }
    auto step_at = [&](double alpha, double* out) {
        for (int i = 0; i < n; ++i)
            out[i] = std::clamp(x[i] - alpha * g[i], l[i], u[i]) - x[i];
    };
    auto ok = [&](const double* st) {
        return norm2(n, st) <= delta && model(n, g, h, st) <= kMu0 * dot(n, g, st);
    };

    double alpha = std::min(1.0, delta / gnorm);
    step_at(alpha, s);
    if (ok(s)) {
        // extrapolate while the condition keeps holding
        double best = alpha;
        double trial[BoxNlp::kMaxDim];
        for (int it = 0; it < 20; ++it) {
            const double next = alpha * 2.0;
            step_at(next, trial);
            if (!ok(trial)) break;
            alpha = best = next;
            std::copy(trial, trial + n, s);
        }
        return best;
    }
    for (int it = 0; it < 40; ++it) {
        alpha *= 0.5;
        step_at(alpha, s);
        if (ok(s)) return alpha;
    }
    return alpha;  // tiny projected-gradient step; caller handles no-progress
}

// Preconditioned Steihaug CG on the free subspace at x + s (s = Cauchy step).
// On return d holds the full-space correction (zero on bound components).
void subspace_cg(int n, const double* x, const double* g, const double* h,
                 const double* l, const double* u, double delta,
                 const TronSettings& cfg, Workspace& w, double* d) {
    std::fill(d, d + n, 0.0);
    int nf = 0;
    for (int i = 0; i < n; ++i) {
        const double xi = x[i] + w.s[i];
        if (xi > l[i] && xi < u[i]) w.free_idx[nf++] = i;
    }
    if (nf == 0) return;

    // reduced gradient of the model at the Cauchy point
    matvec(n, h, w.s, w.hp);
    double rf[BoxNlp::kMaxDim], hf[BoxNlp::kMaxDim * BoxNlp::kMaxDim];
    for (int a = 0; a < nf; ++a) {
        rf[a] = -(g[w.free_idx[a]] + w.hp[w.free_idx[a]]);
        for (int b = 0; b < nf; ++b)
            hf[a * nf + b] = h[w.free_idx[a] * n + w.free_idx[b]];
    }
    const bool have_prec = cholesky(nf, hf, w.prec);

    double dk[BoxNlp::kMaxDim] = {0};
    double sfull[BoxNlp::kMaxDim];
    std::copy(w.s, w.s + n, sfull);

    auto expand = [&](const double* red, double* full) {
        std::fill(full, full + n, 0.0);
        for (int a = 0; a < nf; ++a) full[w.free_idx[a]] = red[a];
    };

    double zk[BoxNlp::kMaxDim];
    if (have_prec) chol_solve(nf, w.prec, rf, zk);
    else std::copy(rf, rf + nf, zk);
    double pk[BoxNlp::kMaxDim];
    std::copy(zk, zk + nf, pk);
    double rz = dot(nf, rf, zk);
    const double r0 = norm2(nf, rf);
    if (r0 == 0.0) return;

    for (int it = 0; it < cfg.max_cg; ++it) {
        double hpk[BoxNlp::kMaxDim];
        for (int a = 0; a < nf; ++a) {
            double v = 0.0;
            for (int b = 0; b < nf; ++b) v += hf[a * nf + b] * pk[b];
            hpk[a] = v;
        }
        const double curv = dot(nf, pk, hpk);
        double pfull[BoxNlp::kMaxDim], dfull[BoxNlp::kMaxDim];
        expand(pk, pfull);
        expand(dk, dfull);
        double sd[BoxNlp::kMaxDim];
        for (int i = 0; i < n; ++i) sd[i] = sfull[i] + dfull[i];

        if (curv <= 0.0) {
            // negative curvature: follow pk to the trust-region boundary
            const double tau = boundary_tau(n, sd, pfull, delta);
            for (int a = 0; a < nf; ++a) dk[a] += tau * pk[a];
            break;
        }
        const double alpha = rz / curv;
        double dnext[BoxNlp::kMaxDim];
        for (int a = 0; a < nf; ++a) dnext[a] = dk[a] + alpha * pk[a];
        double dnfull[BoxNlp::kMaxDim];
        expand(dnext, dnfull);
        double snext[BoxNlp::kMaxDim];
        for (int i = 0; i < n; ++i) snext[i] = sfull[i] + dnfull[i];
        if (norm2(n, snext) >= delta) {
            const double tau = boundary_tau(n, sd, pfull, delta);
            for (int a = 0; a < nf; ++a) dk[a] += tau * pk[a];
            break;
        }
        std::copy(dnext, dnext + nf, dk);
        for (int a = 0; a < nf; ++a) rf[a] -= alpha * hpk[a];
        if (norm2(nf, rf) <= cfg.cg_tol * r0) break;
        double znext[BoxNlp::kMaxDim];
        if (have_prec) chol_solve(nf, w.prec, rf, znext);
        else std::copy(rf, rf + nf, znext);
        const double rznext = dot(nf, rf, znext);
        const double betak = rznext / rz;
        for (int a = 0; a < nf; ++a) pk[a] = znext[a] + betak * pk[a];
        rz = rznext;
    }
    expand(dk, d);
}

}  // namespace

TronResult solve_one(const BoxNlp& problem, double* x, const TronSettings& cfg) {
    const int n = problem.dim();
    const double* l = problem.lower();
    const double* u = problem.upper();
    Workspace w;
    TronResult res;

    clip(n, l, u, x);
    double f = problem.value(x);
    if (!std::isfinite(f)) {
        res.status = TronStatus::NumericalError;
        return res;
    }

    double delta = 0.0;
    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
        problem.gradient(x, w.g);
        if (!finite(n, w.g)) {
            res.status = TronStatus::NumericalError;
            res.iterations = iter;
            res.objective = f;
            return res;
        }
        double pgnorm = 0.0;
        for (int i = 0; i < n; ++i) {
            double gi = w.g[i];
            if (x[i] <= l[i]) gi = std::min(gi, 0.0);
            else if (x[i] >= u[i]) gi = std::max(gi, 0.0);
            pgnorm = std::max(pgnorm, std::abs(gi));
        }
        res.projected_gradient = pgnorm;
        if (pgnorm <= cfg.gtol) {
            res.status = TronStatus::Converged;
            res.iterations = iter;
            res.objective = f;
            return res;
        }
        problem.hessian(x, w.h);
        if (!finite(n * n, w.h)) {
            res.status = TronStatus::NumericalError;
            res.iterations = iter;
            res.objective = f;
            return res;
        }
        if (iter == 0 && delta == 0.0)
            delta = std::max(norm2(n, w.g), cfg.delta_floor);

        // Cauchy step, subspace CG correction, projected line search.
        cauchy_point(n, x, w.g, w.h, l, u, delta, w.s);
        subspace_cg(n, x, w.g, w.h, l, u, delta, cfg, w, w.d);

        const double qc = model(n, w.g, w.h, w.s);
        double beta = 1.0;
        bool used_d = false;
        for (int ls = 0; ls < 20; ++ls) {
            for (int i = 0; i < n; ++i)
                w.st[i] = std::clamp(x[i] + w.s[i] + beta * w.d[i], l[i], u[i]) - x[i];
            if (model(n, w.g, w.h, w.st) <= qc) {
                used_d = true;
                break;
            }
            beta *= 0.5;
        }
        const double* step = used_d ? w.st : w.s;

        const double q = model(n, w.g, w.h, step);
        double xt[BoxNlp::kMaxDim];
        for (int i = 0; i < n; ++i) xt[i] = std::clamp(x[i] + step[i], l[i], u[i]);
        const double ft = problem.value(xt);
        if (!std::isfinite(ft)) {
            res.status = TronStatus::NumericalError;
            res.iterations = iter;
            res.objective = f;
            return res;
        }
        const double ared = f - ft;
        const double pred = -q;
        const double ratio = pred > 0.0 ? ared / pred : (ared > 0.0 ? 1.0 : -1.0);
        const double snorm = norm2(n, step);

        if (ratio < 0.25) delta = 0.25 * std::max(snorm, 1e-12);
        else if (ratio > 0.75 && snorm >= 0.9 * delta)
            delta = std::min(2.0 * delta, kDeltaMax);

        if (ared > 0.0 && ratio > kEta) {
            std::copy(xt, xt + n, x);
            f = ft;
        }
        if (delta < 1e-14) break;  // no further progress possible
    }

    problem.gradient(x, w.g);
    double pgnorm = 0.0;
    for (int i = 0; i < n; ++i) {
        double gi = w.g[i];
        if (x[i] <= l[i]) gi = std::min(gi, 0.0);
        else if (x[i] >= u[i]) gi = std::max(gi, 0.0);
        pgnorm = std::max(pgnorm, std::abs(gi));
    }
    res.projected_gradient = pgnorm;
    res.status = pgnorm <= cfg.gtol ? TronStatus::Converged : TronStatus::IterationLimit;
    res.iterations = cfg.max_iterations;
    res.objective = f;
    return res;
}

std::vector<TronResult> solve_batch(const std::vector<BatchItem>& items,
                                    const TronSettings& settings, int workers) {
    std::vector<TronResult> results(items.size());
    parallel_for(items.size(), workers, [&](std::size_t k) {
        results[k] = solve_one(*items[k].problem, items[k].x, settings);
    });
    return results;
}

}  // namespace gridadmm
