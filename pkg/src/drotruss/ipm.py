"""Primal-dual interior-point solver for the canonical conic form.

Algorithm: infeasible-start homogeneous self-dual embedding with
Nesterov-Todd scaling and Mehrotra predictor-corrector steps. The embedding
carries iterates (x, y, z, s, tau, kappa); optimal solutions appear as
tau -> tau* > 0, infeasibility certificates as kappa bounded away from zero.

Linear algebra: the symmetric quasi-definite 3x3 block KKT system

    [ 0    A^T   G^T ] [dx]   [rx]
    [ A    0     0   ] [dy] = [ry]
    [ G    0   -W^2  ] [dz]   [rz]

is factored once per iteration (dense LU for small systems, sparse SuperLU
otherwise) with static regularization (+delta on the x block, -delta on the
y and z blocks) and iterative refinement against the unregularized matrix.

Scaling: Ruiz equilibration (row factors uniform within each cone block,
plus column factors and scalar cost/rhs factors) is applied to the data by
default; every stopping test is evaluated on the original, unscaled data so
tolerances keep their stated meaning. All steps are deterministic.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .conic import NONNEG, SOC, ConeProgram, Solution

OPTIMAL = "optimal"
PRIMAL_INFEASIBLE = "primal_infeasible"
DUAL_INFEASIBLE = "dual_infeasible"
MAX_ITER = "max_iter"
NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class SolverSettings:
    tol_feas: float = 1e-8
    tol_gap: float = 1e-8
    max_iter: int = 200
    equilibrate: bool = True
    ruiz_iters: int = 10
    static_reg: float = 1e-11
    refine_steps: int = 8
    frac_to_boundary: float = 0.99
    dense_threshold: int = 400
    max_rescues: int = 3
    verbose: bool = False


# ---------------------------------------------------------------------------
# Cone arithmetic on the partitioned slack space
# ---------------------------------------------------------------------------

def _cone_unit(slices, m: int) -> np.ndarray:
    e = np.zeros(m)
    for kind, a, b in slices:
        if kind == NONNEG:
            e[a:b] = 1.0
        else:
            e[a] = 1.0
    return e


def _interior_pad(slices, v: np.ndarray) -> np.ndarray:
    """Per-block nudge toward the central ray, sized relative to the block."""
    pad = np.zeros_like(v)
    for kind, a, b in slices:
        if kind == NONNEG:
            pad[a:b] = 1e-7 * (1.0 + np.abs(v[a:b]))
        else:
            pad[a] = 1e-7 * (1.0 + np.linalg.norm(v[a:b]))
    return pad


def _cone_margin(slices, v: np.ndarray) -> float:
    """Smallest interior margin: min v_i over nonneg parts, v0 - ||vbar|| per SOC."""
    margin = math.inf
    for kind, a, b in slices:
        if kind == NONNEG:
            if b > a:
                margin = min(margin, float(v[a:b].min()))
        else:
            margin = min(margin, float(v[a] - np.linalg.norm(v[a + 1:b])))
    return margin


def _cone_product(slices, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    out = np.empty_like(u)
    for kind, a, b in slices:
        if kind == NONNEG:
            out[a:b] = u[a:b] * v[a:b]
        else:
            out[a] = u[a:b] @ v[a:b]
            out[a + 1:b] = u[a] * v[a + 1:b] + v[a] * u[a + 1:b]
    return out


def _cone_div(slices, lam: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Solve lam o g = d blockwise (arrow-matrix solve on SOC blocks)."""
    g = np.empty_like(d)
    for kind, a, b in slices:
        if kind == NONNEG:
            g[a:b] = d[a:b] / lam[a:b]
        else:
            l0 = lam[a]
            lbar = lam[a + 1:b]
            det = l0 * l0 - lbar @ lbar
            # lam is the scaled point W z; when both s and z collapse to the
            # boundary (no strict complementarity) roundoff in forming it can
            # leave lam outside the cone even though s and z are interior
            if det <= 0.0 or l0 <= 0.0:
                raise FloatingPointError("scaled point left the cone interior")
            g0 = (l0 * d[a] - lbar @ d[a + 1:b]) / det
            g[a] = g0
            g[a + 1:b] = (d[a + 1:b] - g0 * lbar) / l0
    return g


def _cone_max_step(slices, v: np.ndarray, dv: np.ndarray) -> float:
    """Largest alpha >= 0 with v + alpha*dv still in the cone (inf if unbounded)."""
    alpha = math.inf
    for kind, a, b in slices:
        if kind == NONNEG:
            neg = dv[a:b] < 0.0
            if np.any(neg):
                alpha = min(alpha, float((-v[a:b][neg] / dv[a:b][neg]).min()))
        else:
            v0, d0 = v[a], dv[a]
            vbar, dbar = v[a + 1:b], dv[a + 1:b]
            aq = d0 * d0 - dbar @ dbar
            bq = 2.0 * (v0 * d0 - vbar @ dbar)
            cq = max(v0 * v0 - vbar @ vbar, 0.0)
            if abs(aq) < 1e-14 * max(1.0, abs(bq), abs(cq)):
                if bq < 0.0:
                    alpha = min(alpha, -cq / bq)
                continue
            disc = bq * bq - 4.0 * aq * cq
            if disc < 0.0:
                continue  # aq > 0 and no real roots: stays interior
            sq = math.sqrt(disc)
            q = -0.5 * (bq + math.copysign(sq, bq)) if bq != 0.0 else 0.5 * sq
            roots = []
            if q != 0.0:
                roots = [q / aq, cq / q]
            else:
                if aq < 0.0:
                    roots = [math.sqrt(max(cq / -aq, 0.0))]
            pos = [r for r in roots if r > 0.0]
            if pos:
                alpha = min(alpha, min(pos))
    return alpha


class _NTScaling:
    """Nesterov-Todd scaling point W with W z = W^{-1} s = lambda."""

    __slots__ = ("slices", "w_nonneg", "soc")

    def __init__(self, slices, s: np.ndarray, z: np.ndarray):
        self.slices = slices
        self.w_nonneg = {}
        self.soc = {}
        for kind, a, b in slices:
            if kind == NONNEG:
                sb, zb = s[a:b], z[a:b]
                if np.any(sb <= 0.0) or np.any(zb <= 0.0):
                    raise FloatingPointError("nonneg iterate left the cone interior")
                self.w_nonneg[a] = np.sqrt(sb / zb)
            else:
                sb, zb = s[a:b], z[a:b]
                js = (sb[0] - np.linalg.norm(sb[1:])) * (sb[0] + np.linalg.norm(sb[1:]))
                jz = (zb[0] - np.linalg.norm(zb[1:])) * (zb[0] + np.linalg.norm(zb[1:]))
                if js <= 0.0 or jz <= 0.0 or sb[0] <= 0.0 or zb[0] <= 0.0:
                    raise FloatingPointError("soc iterate left the cone interior")
                sn = sb / math.sqrt(js)
                zn = zb / math.sqrt(jz)
                gamma = math.sqrt((1.0 + sn @ zn) / 2.0)
                wbar = sn.copy()
                wbar[0] += zn[0]
                wbar[1:] -= zn[1:]
                wbar /= 2.0 * gamma
                eta = (js / jz) ** 0.25
                self.soc[a] = (eta, wbar)

    def apply_w(self, v: np.ndarray) -> np.ndarray:
        # soc block: W = eta * [[w0, wb^T], [wb, I + wb wb^T/(1+w0)]],
        # the psd square root of P(wbar) = 2 wbar wbar^T - J
        out = np.empty_like(v)
        for kind, a, b in self.slices:
            if kind == NONNEG:
                out[a:b] = self.w_nonneg[a] * v[a:b]
            else:
                eta, wbar = self.soc[a]
                vb = v[a:b]
                dot = wbar[1:] @ vb[1:]
                out[a] = wbar[0] * vb[0] + dot
                out[a + 1:b] = vb[1:] + (vb[0] + dot / (1.0 + wbar[0])) * wbar[1:]
                out[a:b] *= eta
        return out

    def apply_winv(self, v: np.ndarray) -> np.ndarray:
        # inverse flips the sign of wb (Jordan inverse of the scaling point)
        out = np.empty_like(v)
        for kind, a, b in self.slices:
            if kind == NONNEG:
                out[a:b] = v[a:b] / self.w_nonneg[a]
            else:
                eta, wbar = self.soc[a]
                vb = v[a:b]
                dot = wbar[1:] @ vb[1:]
                out[a] = wbar[0] * vb[0] - dot
                out[a + 1:b] = vb[1:] + (-vb[0] + dot / (1.0 + wbar[0])) * wbar[1:]
                out[a:b] /= eta
        return out

    def w2_blocks(self):
        """[(start, dense W^2 block or 1-d diag)] for KKT assembly."""
        out = []
        for kind, a, b in self.slices:
            if kind == NONNEG:
                out.append((a, b, self.w_nonneg[a] ** 2, True))
            else:
                eta, wbar = self.soc[a]
                d = b - a
                J = np.diag(np.concatenate(([1.0], -np.ones(d - 1))))
                W2 = 2.0 * np.outer(wbar, wbar) - J
                out.append((a, b, (eta * eta) * W2, False))
        return out


# ---------------------------------------------------------------------------
# Ruiz equilibration (cone-block-uniform row factors)
# ---------------------------------------------------------------------------

def _ruiz(A: sp.csc_matrix, G: sp.csc_matrix, c, b, h, slices, iters: int):
    p, n = A.shape
    m = G.shape[0]
    a_coo = A.tocoo()
    g_coo = G.tocoo()
    a_val = np.abs(a_coo.data.astype(float))
    g_val = np.abs(g_coo.data.astype(float))
    d = np.ones(n)
    ea = np.ones(p)
    eg = np.ones(m)
    for _ in range(iters):
        ra = np.zeros(p)
        rg = np.zeros(m)
        if a_val.size:
            np.maximum.at(ra, a_coo.row, a_val)
        if g_val.size:
            np.maximum.at(rg, g_coo.row, g_val)
        for kind, s0, s1 in slices:
            if kind == SOC:
                rg[s0:s1] = rg[s0:s1].max()
        sa = 1.0 / np.sqrt(np.where(ra > 0.0, ra, 1.0))
        sg = 1.0 / np.sqrt(np.where(rg > 0.0, rg, 1.0))
        if a_val.size:
            a_val *= sa[a_coo.row]
        g_val *= sg[g_coo.row]
        ea *= sa
        eg *= sg
        cn = np.zeros(n)
        if a_val.size:
            np.maximum.at(cn, a_coo.col, a_val)
        np.maximum.at(cn, g_coo.col, g_val)
        sc = 1.0 / np.sqrt(np.where(cn > 0.0, cn, 1.0))
        if a_val.size:
            a_val *= sc[a_coo.col]
        g_val *= sc[g_coo.col]
        d *= sc
    A_s = sp.coo_matrix((np.sign(a_coo.data) * a_val, (a_coo.row, a_coo.col)), shape=(p, n)).tocsc()
    G_s = sp.coo_matrix((np.sign(g_coo.data) * g_val, (g_coo.row, g_coo.col)), shape=(m, n)).tocsc()
    c_s = d * c
    b_s = ea * b
    h_s = eg * h
    cscale = max(1.0, float(np.abs(c_s).max(initial=0.0)))
    bscale = max(1.0, float(np.abs(b_s).max(initial=0.0)), float(np.abs(h_s).max(initial=0.0)))
    return A_s, G_s, c_s / cscale, b_s / bscale, h_s / bscale, d, ea, eg, cscale, bscale


# ---------------------------------------------------------------------------
# KKT assembly and solves
# ---------------------------------------------------------------------------

class _KKT:
    """Factor/solve workspace for the regularized 3x3 block system."""

    def __init__(self, A, G, slices, reg: float, dense: bool):
        self.slices = slices
        self.reg = reg
        self.dense = dense
        p, n = A.shape
        m = G.shape[0]
        self.n, self.p, self.m = n, p, m
        self.dim = n + p + m
        if dense:
            self.A = A.toarray()
            self.G = G.toarray()
            base = np.zeros((self.dim, self.dim))
            base[:n, n:n + p] = self.A.T
            base[n:n + p, :n] = self.A
            base[:n, n + p:] = self.G.T
            base[n + p:, :n] = self.G
            self.base_unreg = base.copy()
            base[:n, :n] += reg * np.eye(n)
            base[n:n + p, n:n + p] -= reg * np.eye(p)
            self.base = base
            self.lu = None
            self.K_ld = None
        else:
            self.A = A.tocsr()
            self.G = G.tocsr()
            self.AT = self.A.T.tocsr()
            self.GT = self.G.T.tocsr()
            a_coo = A.tocoo()
            g_coo = G.tocoo()
            rows = [a_coo.row + n, a_coo.col, g_coo.row + n + p, g_coo.col,
                    np.arange(n), np.arange(n, n + p)]
            cols = [a_coo.col, a_coo.row + n, g_coo.col, g_coo.row + n + p,
                    np.arange(n), np.arange(n, n + p)]
            vals = [a_coo.data, a_coo.data, g_coo.data, g_coo.data,
                    np.full(n, reg), np.full(p, -reg)]
            # W^2 slots (values rewritten every iteration): diagonal entries for
            # nonneg blocks, dense blocks for SOC blocks, plus -reg on the diag
            w2_rows, w2_cols = [], []
            for kind, a, b in slices:
                if kind == NONNEG:
                    idx = np.arange(a, b) + n + p
                    w2_rows.append(idx)
                    w2_cols.append(idx)
                else:
                    d = b - a
                    ii, jj = np.meshgrid(np.arange(a, b), np.arange(a, b), indexing="ij")
                    w2_rows.append(ii.ravel() + n + p)
                    w2_cols.append(jj.ravel() + n + p)
            rows.append(np.concatenate(w2_rows))
            cols.append(np.concatenate(w2_cols))
            self.const_vals = np.concatenate(vals)
            self.rows = np.concatenate(rows).astype(np.int32)
            self.cols = np.concatenate(cols).astype(np.int32)
            self.lu = None
        self.scaling = None

    def factor(self, scaling: _NTScaling) -> None:
        self.scaling = scaling
        n, p, m = self.n, self.p, self.m
        if self.dense:
            K = self.base.copy()
            Ku = self.base_unreg.astype(np.longdouble)
            zo = n + p
            for a, b, block, is_diag in scaling.w2_blocks():
                if is_diag:
                    idx = np.arange(a, b)
                    K[zo + idx, zo + idx] -= block + self.reg
                    Ku[zo + idx, zo + idx] -= block
                else:
                    K[zo + a:zo + b, zo + a:zo + b] -= block + self.reg * np.eye(b - a)
                    Ku[zo + a:zo + b, zo + a:zo + b] -= block
            if not np.all(np.isfinite(K)):
                raise FloatingPointError("kkt matrix has non-finite entries")
            self.K_ld = Ku
            with warnings.catch_warnings():
                # an endgame-singular factorization surfaces as non-finite
                # solve output and goes through the rescue path; the scipy
                # warning would only add noise on a handled condition
                warnings.simplefilter("ignore", sla.LinAlgWarning)
                self.lu = sla.lu_factor(K, check_finite=False)
        else:
            w2_vals = []
            for a, b, block, is_diag in scaling.w2_blocks():
                if is_diag:
                    w2_vals.append(-(block + self.reg))
                else:
                    w2_vals.append(-(block + self.reg * np.eye(b - a)).ravel())
            vals = np.concatenate([self.const_vals] + w2_vals)
            if not np.all(np.isfinite(vals)):
                raise FloatingPointError("kkt matrix has non-finite entries")
            K = sp.coo_matrix((vals, (self.rows, self.cols)), shape=(self.dim, self.dim)).tocsc()
            self.lu = spla.splu(K, permc_spec="COLAMD")

    def _matvec_unreg(self, sol: np.ndarray) -> np.ndarray:
        """Unregularized K3 times sol, for iterative refinement."""
        n, p = self.n, self.p
        dx, dy, dz = sol[:n], sol[n:n + p], sol[n + p:]
        out = np.empty_like(sol)
        if self.dense:
            out[:n] = self.A.T @ dy + self.G.T @ dz
            out[n:n + p] = self.A @ dx
            out[n + p:] = self.G @ dx - self.scaling.apply_w(self.scaling.apply_w(dz))
        else:
            out[:n] = self.AT @ dy + self.GT @ dz
            out[n:n + p] = self.A @ dx
            out[n + p:] = self.G @ dx - self.scaling.apply_w(self.scaling.apply_w(dz))
        return out

    def solve(self, rx: np.ndarray, ry: np.ndarray, rz: np.ndarray, refine_steps: int):
        rhs = np.concatenate([rx, ry, rz])
        if self.dense:
            sol = sla.lu_solve(self.lu, rhs, check_finite=False)
        else:
            sol = self.lu.solve(rhs)
        if not np.all(np.isfinite(sol)):
            raise FloatingPointError("kkt solve produced non-finite values")
        # refine against the unregularized matrix; endgame systems contract
        # slowly (the static regularization error shrinks by a modest factor
        # per round), so run the full budget and bail only on divergence
        rhs_norm = float(np.linalg.norm(rhs))
        prev = math.inf
        if self.dense:
            rhs_ld = rhs.astype(np.longdouble)
        for _ in range(refine_steps):
            if self.dense:
                # residual in extended precision: near degenerate optima the
                # unregularized system is ill conditioned enough that a plain
                # double residual is mostly roundoff, which caps the attainable
                # direction accuracy exactly when the endgame needs it
                resid = np.asarray(rhs_ld - self.K_ld @ sol.astype(np.longdouble),
                                   dtype=np.float64)
            else:
                resid = rhs - self._matvec_unreg(sol)
            rnorm = float(np.linalg.norm(resid))
            if rnorm <= 1e-13 * (1.0 + rhs_norm) or rnorm > prev:
                break
            if self.dense:
                corr = sla.lu_solve(self.lu, resid, check_finite=False)
            else:
                corr = self.lu.solve(resid)
            if not np.all(np.isfinite(corr)):
                break
            sol = sol + corr
            prev = rnorm
        n, p = self.n, self.p
        return sol[:n], sol[n:n + p], sol[n + p:]


# ---------------------------------------------------------------------------
# Main solve loop
# ---------------------------------------------------------------------------

def solve(program: ConeProgram, settings: SolverSettings | None = None,
          warm_start: Solution | None = None) -> Solution:
    """Solve a ConeProgram; see module docstring for the algorithm."""
    st = settings or SolverSettings()
    slices = program.cone_slices()
    n, p, m = program.n_vars, program.n_eq, program.n_cone_rows

    c0, b0, h0 = program.c, program.b, program.h
    A0, G0 = program.A.tocsr(), program.G.tocsr()
    A0T, G0T = program.A.T.tocsr(), program.G.T.tocsr()
    norm_c0 = float(np.linalg.norm(c0))
    norm_b0 = float(np.linalg.norm(b0))
    norm_h0 = float(np.linalg.norm(h0))

    if st.equilibrate:
        A, G, c, b, h, dcol, ea, eg, cscale, bscale = _ruiz(
            program.A, program.G, c0, b0, h0, slices, st.ruiz_iters)
    else:
        A, G, c, b, h = program.A, program.G, c0.copy(), b0.copy(), h0.copy()
        dcol, ea, eg = np.ones(n), np.ones(p), np.ones(m)
        cscale = bscale = 1.0

    dense = (n + p + m) <= st.dense_threshold
    kkt = _KKT(A, G, slices, st.static_reg, dense)
    if dense:
        A_op, G_op = kkt.A, kkt.G
        AT_op, GT_op = kkt.A.T, kkt.G.T
    else:
        A_op, G_op = kkt.A, kkt.G
        AT_op, GT_op = kkt.AT, kkt.GT

    e = _cone_unit(slices, m)

    # cone-interior unit-point initialization (warm starts are nudged interior)
    x = np.zeros(n)
    y = np.zeros(p)
    s = e.copy()
    z = e.copy()
    tau, kappa = 1.0, 1.0
    if warm_start is not None and warm_start.primal is not None:
        x = warm_start.primal / (dcol * bscale)
        if p and warm_start.dual_eq is not None:
            y = warm_start.dual_eq / (ea * cscale)
        if warm_start.slack is not None and warm_start.dual_cone is not None:
            s_try = warm_start.slack * eg / bscale
            z_try = warm_start.dual_cone / (eg * cscale)
            pad_s = max(1e-4, 1e-4 * float(np.abs(s_try).max(initial=0.0)) - _cone_margin(slices, s_try))
            pad_z = max(1e-4, 1e-4 * float(np.abs(z_try).max(initial=0.0)) - _cone_margin(slices, z_try))
            s = s_try + pad_s * e
            z = z_try + pad_z * e

    best = None
    best_metric = math.inf
    iterations = 0
    status = MAX_ITER
    rescues = st.max_rescues

    def unscale(xv, yv, zv, sv, tv):
        xo = dcol * xv * (bscale / tv)
        so = (sv / eg) * (bscale / tv)
        yo = (ea * yv) * (cscale / tv)
        zo = (eg * zv) * (cscale / tv)
        return xo, yo, zo, so

    def metrics(xv, yv, zv, sv, tv):
        xo, yo, zo, so = unscale(xv, yv, zv, sv, tv)
        pcost = float(c0 @ xo)
        dcost = -float(b0 @ yo + h0 @ zo)
        pres_eq = np.linalg.norm(A0 @ xo - b0) / (1.0 + norm_b0) if p else 0.0
        pres_cone = np.linalg.norm(G0 @ xo + so - h0) / (1.0 + norm_h0)
        pres = max(pres_eq, pres_cone)
        dres = np.linalg.norm(A0T @ yo + G0T @ zo + c0) / (1.0 + norm_c0)
        gap_abs = float(so @ zo)
        relgap = gap_abs / max(1.0, abs(pcost))
        return xo, yo, zo, so, pcost, dcost, pres, dres, relgap

    for iterations in range(st.max_iter + 1):
        # residuals of the embedding (scaled space)
        R1 = AT_op @ y + GT_op @ z + c * tau
        R2 = A_op @ x - b * tau
        R3 = G_op @ x + s - h * tau
        R4 = float(c @ x + b @ y + h @ z + kappa)
        # barrier parameter over full cone rows plus the tau-kappa pair
        mu = (s @ z + tau * kappa) / (m + 1)

        if not np.isfinite(mu) or not np.isfinite(R4):
            status = NUMERICAL_FAILURE
            break

        # stopping tests on the original data
        xo, yo, zo, so, pcost, dcost, pres, dres, relgap = metrics(x, y, z, s, tau)
        if st.verbose:
            print(f"[ipm] it={iterations:3d} obj={pcost:+.6e} gap={relgap:.2e} "
                  f"pres={pres:.2e} dres={dres:.2e} mu={mu:.2e} "
                  f"tau={tau:.2e} kappa={kappa:.2e}")
        metric = max(pres, dres, relgap)
        if metric < best_metric:
            best_metric = metric
            best = (xo, yo, zo, so, pcost, pres, dres, relgap)
        if pres <= st.tol_feas and dres <= st.tol_feas and relgap <= st.tol_gap:
            status = OPTIMAL
            best = (xo, yo, zo, so, pcost, pres, dres, relgap)
            break

        # infeasibility certificates (original data, un-normalized by tau)
        y_c = ea * y * cscale
        z_c = eg * z * cscale
        by_hz = float(b0 @ y_c + h0 @ z_c)
        if by_hz < 0.0 and kappa > 1e2 * tau * max(1.0, mu):
            yn = y_c / -by_hz
            zn = z_c / -by_hz
            if np.linalg.norm(A0T @ yn + G0T @ zn) <= st.tol_feas * (1.0 + norm_c0):
                return Solution(PRIMAL_INFEASIBLE, None, yn, zn, None,
                                math.inf, math.nan, iterations)
        x_c = dcol * x * bscale
        s_c = (s / eg) * bscale
        ctx = float(c0 @ x_c)
        if ctx < 0.0 and kappa > 1e2 * tau * max(1.0, mu):
            xn = x_c / -ctx
            sn = s_c / -ctx
            dinf = max(np.linalg.norm(A0 @ xn) if p else 0.0,
                       np.linalg.norm(G0 @ xn + sn))
            if dinf <= st.tol_feas * (1.0 + max(norm_b0, norm_h0)):
                return Solution(DUAL_INFEASIBLE, xn, None, None, sn,
                                -math.inf, math.nan, iterations)

        if iterations == st.max_iter:
            status = MAX_ITER
            break

        try:
            scaling = _NTScaling(slices, s, z)
            kkt.factor(scaling)
            lam = scaling.apply_w(z)

            u1, u2, u3 = kkt.solve(-c, b, h, st.refine_steps)
            denom = float(c @ u1 + b @ u2 + h @ u3) - kappa / tau
            if not np.isfinite(denom) or denom == 0.0:
                raise FloatingPointError("degenerate embedding pivot")

            def direction(rho, ds, dkap):
                ldiv = _cone_div(slices, lam, ds)
                v1, v2, v3 = kkt.solve(-rho * R1, -rho * R2,
                                       -rho * R3 - scaling.apply_w(ldiv),
                                       st.refine_steps)
                dtau = (-rho * R4 - dkap / tau
                        - float(c @ v1 + b @ v2 + h @ v3)) / denom
                dx = v1 + dtau * u1
                dy = v2 + dtau * u2
                dz = v3 + dtau * u3
                # scaled steps W dz and W^-1 ds; step bounds are computed
                # against lambda in this space, where the base point is well
                # centered and the boundary margins carry no cancellation
                gz = scaling.apply_w(dz)
                gs = ldiv - gz
                dsv = scaling.apply_w(gs)
                dkappa = (dkap - kappa * dtau) / tau
                return dx, dy, dz, dsv, gs, gz, dtau, dkappa

            # predictor (affine scaling direction)
            ds_aff = -_cone_product(slices, lam, lam)
            dk_aff = -tau * kappa
            dxa, dya, dza, dsa, gsa, gza, dta, dka = direction(1.0, ds_aff, dk_aff)

            # predictor step goes exactly to the boundary; its length sets
            # the centering weight for the combined step
            alpha_aff = min(
                1.0,
                _cone_max_step(slices, lam, gsa),
                _cone_max_step(slices, lam, gza),
                (-tau / dta) if dta < 0.0 else math.inf,
                (-kappa / dka) if dka < 0.0 else math.inf,
            )
            sigma = (1.0 - alpha_aff) ** 3

            # corrector (combined direction with Mehrotra second-order term)
            corr = _cone_product(slices, gsa, gza)
            ds_comb = ds_aff - corr + sigma * mu * e
            dk_comb = dk_aff - dta * dka + sigma * mu
            dx, dy, dz, ds, gs, gz, dtau, dkappa = direction(
                1.0 - sigma, ds_comb, dk_comb)

            alpha = min(
                _cone_max_step(slices, lam, gs),
                _cone_max_step(slices, lam, gz),
                (-tau / dtau) if dtau < 0.0 else math.inf,
                (-kappa / dkappa) if dkappa < 0.0 else math.inf,
            )
            alpha = min(1.0, st.frac_to_boundary * alpha)
        except (FloatingPointError, RuntimeError):
            alpha = -1.0  # signal step breakdown

        if alpha > 0.0:
            # boundary-hugging endgame iterates can land with a nonpositive
            # computed margin through cancellation even under the 0.99 cap;
            # backtrack the step until both cones stay strictly interior
            for _ in range(30):
                s_new = s + alpha * ds
                z_new = z + alpha * dz
                if _cone_margin(slices, s_new) > 0.0 and _cone_margin(slices, z_new) > 0.0 \
                        and tau + alpha * dtau > 0.0 and kappa + alpha * dkappa > 0.0:
                    break
                alpha *= 0.5
            else:
                alpha = -1.0

        if st.verbose:
            print(f"[ipm]        sigma={sigma:.3f} alpha={alpha:.3e}"
                  if alpha > 0.0 else "[ipm]        step breakdown")
        if alpha <= 0.0:
            # without strict complementarity at the optimum the scaled point
            # collapses onto the cone boundary and the step computation turns
            # into pure roundoff; retreat toward the central ray and let the
            # path-following re-approach from a better-conditioned iterate
            # (residuals are recomputed from the point each pass, so this is
            # just a restart from a nearby strictly interior point)
            if rescues == 0:
                status = NUMERICAL_FAILURE
                break
            rescues -= 1
            s = s + _interior_pad(slices, s)
            z = z + _interior_pad(slices, z)
            continue

        x = x + alpha * dx
        y = y + alpha * dy
        z = z_new
        s = s_new
        tau = tau + alpha * dtau
        kappa = kappa + alpha * dkappa

        # the embedding is invariant under positive scaling of the full
        # iterate, but numerically the scale can bleed away over many steps;
        # a shrinking tau inflates every un-normalized quantity (the point
        # itself is x/tau), so pull the iterate back to the tau = 1 slice
        # whenever it drifts; kappa/tau growing means tau -> 0 is a genuine
        # infeasibility ray, not bleed, and must be left alone
        if (tau < 0.1 and kappa < 0.1 * tau) or tau > 10.0:
            r = 1.0 / tau
            x *= r
            y *= r
            z *= r
            s *= r
            kappa *= r
            tau = 1.0

    if best is None:
        return Solution(NUMERICAL_FAILURE, None, None, None, None,
                        math.nan, math.nan, iterations)
    xo, yo, zo, so, pcost, pres, dres, relgap = best
    return Solution(status, xo, yo, zo, so, pcost, relgap, iterations,
                    primal_residual=pres, dual_residual=dres)
