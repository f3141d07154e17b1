#!/usr/bin/env python3
"""Reference full-NLP ACOPF solver used to generate test fixtures.

Solves the polar-form ACOPF directly with scipy's trust-constr and writes
a JSON fixture (objective in $/h, generator set points, bus voltages).
Independent of the C++ solver: nothing here is shared with it except the
case files themselves.

Usage: reference_acopf.py CASE.m [CASE.m ...] -o fixtures.json
"""

import argparse
import json
import re
import sys

import numpy as np
from scipy import sparse
from scipy.optimize import minimize, NonlinearConstraint, Bounds


def parse_matrix(text, name):
    m = re.search(r"mpc\." + name + r"\s*=\s*\[(.*?)\];", text, re.S)
    if m is None:
        raise ValueError(f"matrix mpc.{name} not found")
    rows = []
    for line in m.group(1).splitlines():
        line = line.split("%")[0].strip().rstrip(";").strip()
        if not line:
            continue
        rows.append([float(tok) for tok in line.split()])
    return rows


def load_case(path):
    text = open(path).read()
    base = float(re.search(r"mpc\.baseMVA\s*=\s*([0-9eE.+-]+)", text).group(1))
    return {
        "baseMVA": base,
        "bus": parse_matrix(text, "bus"),
        "gen": parse_matrix(text, "gen"),
        "branch": parse_matrix(text, "branch"),
        "gencost": parse_matrix(text, "gencost"),
    }


class AcopfModel:
    """Polar-form ACOPF: variables [v; theta; pg; qg] (all per-unit)."""

    def __init__(self, case):
        base = case["baseMVA"]
        bus = case["bus"]
        self.nb = len(bus)
        self.busidx = {int(r[0]): i for i, r in enumerate(bus)}
        self.pd = np.array([r[2] / base for r in bus])
        self.qd = np.array([r[3] / base for r in bus])
        self.gs = np.array([r[4] / base for r in bus])
        self.bs = np.array([r[5] / base for r in bus])
        self.vmax = np.array([r[11] for r in bus])
        self.vmin = np.array([r[12] for r in bus])
        self.ref = next(i for i, r in enumerate(bus) if int(r[1]) == 3)

        gens = [g for g in case["gen"] if int(g[7]) != 0]
        costs = [c for g, c in zip(case["gen"], case["gencost"]) if int(g[7]) != 0]
        self.ng = len(gens)
        self.gbus = np.array([self.busidx[int(g[0])] for g in gens])
        self.pmax = np.array([g[8] / base for g in gens])
        self.pmin = np.array([g[9] / base for g in gens])
        self.qmax = np.array([g[3] / base for g in gens])
        self.qmin = np.array([g[4] / base for g in gens])
        # quadratic cost in p.u. power
        self.c2 = np.zeros(self.ng)
        self.c1 = np.zeros(self.ng)
        self.c0 = np.zeros(self.ng)
        for k, c in enumerate(costs):
            if int(c[0]) != 2:
                raise ValueError("only polynomial costs supported")
            n = int(c[3])
            coef = c[4:4 + n]  # highest degree first
            coef = [0.0] * (3 - n) + list(coef)
            self.c2[k] = coef[0] * base * base
            self.c1[k] = coef[1] * base
            self.c0[k] = coef[2]

        brs = [b for b in case["branch"] if int(b[10]) != 0]
        self.nl = len(brs)
        self.f = np.array([self.busidx[int(b[0])] for b in brs])
        self.t = np.array([self.busidx[int(b[1])] for b in brs])
        self.rate = np.array([b[5] / base for b in brs])
        gii = np.zeros(self.nl); bii = np.zeros(self.nl)
        gij = np.zeros(self.nl); bij = np.zeros(self.nl)
        gji = np.zeros(self.nl); bji = np.zeros(self.nl)
        gjj = np.zeros(self.nl); bjj = np.zeros(self.nl)
        for k, b in enumerate(brs):
            ys = 1.0 / complex(b[2], b[3])
            ysh = complex(0.0, b[4])
            tap = b[8] if b[8] != 0.0 else 1.0
            a = tap * np.exp(1j * np.deg2rad(b[9]))
            yii = (ys + 0.5 * ysh) / (abs(a) ** 2)
            yij = -ys / np.conj(a)
            yji = -ys / a
            yjj = ys + 0.5 * ysh
            gii[k], bii[k] = yii.real, yii.imag
            gij[k], bij[k] = yij.real, yij.imag
            gji[k], bji[k] = yji.real, yji.imag
            gjj[k], bjj[k] = yjj.real, yjj.imag
        self.gii, self.bii, self.gij, self.bij = gii, bii, gij, bij
        self.gji, self.bji, self.gjj, self.bjj = gji, bji, gjj, bjj
        self.nv = 2 * self.nb + 2 * self.ng

    def split(self, x):
        nb, ng = self.nb, self.ng
        return x[:nb], x[nb:2 * nb], x[2 * nb:2 * nb + ng], x[2 * nb + ng:]

    def flows(self, v, th):
        vi, vj = v[self.f], v[self.t]
        dth = th[self.f] - th[self.t]
        c, s = np.cos(dth), np.sin(dth)
        wi, wj = vi * vi, vj * vj
        wr, wim = vi * vj * c, vi * vj * s
        pij = self.gii * wi + self.gij * wr + self.bij * wim
        qij = -self.bii * wi - self.bij * wr + self.gij * wim
        pji = self.gjj * wj + self.gji * wr - self.bji * wim
        qji = -self.bjj * wj - self.bji * wr - self.gji * wim
        return pij, qij, pji, qji

    def objective(self, x):
        _, _, pg, _ = self.split(x)
        return float(np.sum(self.c2 * pg * pg + self.c1 * pg + self.c0))

    def objective_grad(self, x):
        g = np.zeros(self.nv)
        _, _, pg, _ = self.split(x)
        g[2 * self.nb:2 * self.nb + self.ng] = 2 * self.c2 * pg + self.c1
        return g

    def balance(self, x):
        v, th, pg, qg = self.split(x)
        pij, qij, pji, qji = self.flows(v, th)
        p = -self.pd - self.gs * v * v
        q = -self.qd + self.bs * v * v
        np.add.at(p, self.gbus, pg)
        np.add.at(q, self.gbus, qg)
        np.add.at(p, self.f, -pij)
        np.add.at(p, self.t, -pji)
        np.add.at(q, self.f, -qij)
        np.add.at(q, self.t, -qji)
        return np.concatenate([p, q])

    def flow_partials(self, v, th):
        """d(pij,qij,pji,qji)/d(vi,vj,thi,thj) as arrays of shape (nl,4)."""
        vi, vj = v[self.f], v[self.t]
        dth = th[self.f] - th[self.t]
        c, s = np.cos(dth), np.sin(dth)
        out = {}
        # basis partials: wi, wj, wr, wim wrt (vi, vj, thi, thj)
        dwi = (2 * vi, 0 * vi, 0 * vi, 0 * vi)
        dwj = (0 * vi, 2 * vj, 0 * vi, 0 * vi)
        dwr = (vj * c, vi * c, -vi * vj * s, vi * vj * s)
        dwm = (vj * s, vi * s, vi * vj * c, -vi * vj * c)
        for name, (a, br, bm) in {
            "pij": (self.gii, self.gij, self.bij),
            "qij": (-self.bii, -self.bij, self.gij),
        }.items():
            out[name] = [a * dwi[k] + br * dwr[k] + bm * dwm[k] for k in range(4)]
        for name, (a, br, bm) in {
            "pji": (self.gjj, self.gji, -self.bji),
            "qji": (-self.bjj, -self.bji, -self.gji),
        }.items():
            out[name] = [a * dwj[k] + br * dwr[k] + bm * dwm[k] for k in range(4)]
        return out

    def balance_jac(self, x):
        v, th, pg, qg = self.split(x)
        par = self.flow_partials(v, th)
        nb, ng, nl = self.nb, self.ng, self.nl
        rows, cols, vals = [], [], []

        def add(r, c, val):
            rows.append(r); cols.append(c); vals.append(val)

        for i in range(nb):
            add(i, i, -2 * self.gs[i] * v[i])
            add(nb + i, i, 2 * self.bs[i] * v[i])
        for k in range(ng):
            add(self.gbus[k], 2 * nb + k, 1.0)
            add(nb + self.gbus[k], 2 * nb + ng + k, 1.0)
        colmap = [self.f, self.t, nb + self.f, nb + self.t]
        for k in range(nl):
            for q_, (pn, rowbus) in enumerate([("pij", self.f), ("pji", self.t)]):
                for c_ in range(4):
                    add(rowbus[k], colmap[c_][k], -par[pn][c_][k])
            for q_, (qn, rowbus) in enumerate([("qij", self.f), ("qji", self.t)]):
                for c_ in range(4):
                    add(nb + rowbus[k], colmap[c_][k], -par[qn][c_][k])
        return sparse.csr_matrix((vals, (rows, cols)), shape=(2 * nb, self.nv))

    def limited(self):
        return np.nonzero(self.rate > 0)[0]

    def line_limits(self, x):
        v, th, _, _ = self.split(x)
        pij, qij, pji, qji = self.flows(v, th)
        L = self.limited()
        r2 = self.rate[L] ** 2
        return np.concatenate([r2 - pij[L] ** 2 - qij[L] ** 2,
                               r2 - pji[L] ** 2 - qji[L] ** 2])

    def line_limits_jac(self, x):
        v, th, _, _ = self.split(x)
        pij, qij, pji, qji = self.flows(v, th)
        par = self.flow_partials(v, th)
        L = self.limited()
        nb = self.nb
        rows, cols, vals = [], [], []
        colmap = [self.f, self.t, nb + self.f, nb + self.t]
        for r, k in enumerate(L):
            for c_ in range(4):
                g = -2 * pij[k] * par["pij"][c_][k] - 2 * qij[k] * par["qij"][c_][k]
                rows.append(r); cols.append(colmap[c_][k]); vals.append(g)
                g = -2 * pji[k] * par["pji"][c_][k] - 2 * qji[k] * par["qji"][c_][k]
                rows.append(len(L) + r); cols.append(colmap[c_][k]); vals.append(g)
        return sparse.csr_matrix((vals, (rows, cols)),
                                 shape=(2 * len(L), self.nv))

    def start(self):
        x = np.zeros(self.nv)
        x[:self.nb] = 0.5 * (self.vmin + self.vmax)
        x[2 * self.nb:2 * self.nb + self.ng] = 0.5 * (self.pmin + self.pmax)
        x[2 * self.nb + self.ng:] = 0.5 * (self.qmin + self.qmax)
        return x

    def bounds(self):
        lo = np.concatenate([self.vmin, np.full(self.nb, -2 * np.pi),
                             self.pmin, self.qmin])
        hi = np.concatenate([self.vmax, np.full(self.nb, 2 * np.pi),
                             self.pmax, self.qmax])
        lo[self.nb + self.ref] = 0.0
        hi[self.nb + self.ref] = 0.0
        return Bounds(lo, hi)


def solve(model, maxiter=3000, verbose=0):
    cons = [NonlinearConstraint(model.balance, 0.0, 0.0,
                                jac=model.balance_jac)]
    if len(model.limited()) > 0:
        cons.append(NonlinearConstraint(model.line_limits, 0.0, np.inf,
                                        jac=model.line_limits_jac))
    res = minimize(model.objective, model.start(), jac=model.objective_grad,
                   bounds=model.bounds(), constraints=cons,
                   method="trust-constr",
                   options={"maxiter": maxiter, "gtol": 1e-9, "xtol": 1e-12,
                            "verbose": verbose})
    return res


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("cases", nargs="+")
    ap.add_argument("-o", "--out", default="reference.json")
    ap.add_argument("--maxiter", type=int, default=3000)
    ap.add_argument("-v", "--verbose", type=int, default=0)
    ap.add_argument("--scale", type=float, default=1.0,
                    help="multiply all bus loads (pd, qd) by this factor")
    args = ap.parse_args()

    fixtures = {}
    for path in args.cases:
        name = path.split("/")[-1].removesuffix(".m")
        if args.scale != 1.0:
            name += f"@{args.scale:.6f}"
        case = load_case(path)
        for row in case["bus"]:
            row[2] *= args.scale
            row[3] *= args.scale
        model = AcopfModel(case)
        res = solve(model, args.maxiter, args.verbose)
        v, th, pg, qg = model.split(res.x)
        viol = float(np.max(np.abs(model.balance(res.x))))
        lim = model.line_limits(res.x)
        if len(lim):
            viol = max(viol, float(max(0.0, -lim.min())))
        fixtures[name] = {
            "objective": model.objective(res.x),
            "max_violation": viol,
            "constr_violation": float(res.constr_violation),
            "status": int(res.status),
            "vm": v.tolist(),
            "va": th.tolist(),
            "pg": pg.tolist(),
            "qg": qg.tolist(),
        }
        print(f"{name}: f={fixtures[name]['objective']:.4f} "
              f"viol={viol:.3e} status={res.status} nit={res.nit}",
              file=sys.stderr)
    with open(args.out, "w") as fp:
        json.dump(fixtures, fp, indent=1)


if __name__ == "__main__":
    main()
