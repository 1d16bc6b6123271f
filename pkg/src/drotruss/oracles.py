"""Brute-force reference oracles for the distributionally robust layer.

Everything in this module is deliberately independent of the conic solver:
worst-case expectations are computed by direct optimization over the weight
ambiguity set (exact active-set enumeration seeded and cross-checked by a
projected-gradient ascent with Dykstra projections), the dual value by nested
scalar minimization, and worst-case CVaR by an outer scalar search. These
routines referee the SOCP formulations in tests and in `validate_solution`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import Kernel, RiskSpec, phi_divergence, phi_star, upsilon
from .truss import Design, TrussModel, compliance, expand_loads, member_volume

__all__ = [
    "ValidationReport",
    "empirical_cvar",
    "validate_solution",
    "worst_case_cvar",
    "worst_case_expectation_dual",
    "worst_case_expectation_primal",
]


# ---------------------------------------------------------------------------
# scalar minimization helper

def _golden(fun, lo: float, hi: float, iters: int = 120):
    """Golden-section minimization of a unimodal function on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
        if b - a <= 1e-14 * (1.0 + abs(a) + abs(b)):
            break
    x = 0.5 * (a + b)
    return x, fun(x)


# ---------------------------------------------------------------------------
# projections onto the constraint pieces

def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    cond = u - css / idx > 0
    k = idx[cond][-1]
    theta = css[k - 1] / k
    return np.maximum(v - theta, 0.0)


def _project_chi2_ball(v: np.ndarray, w0: np.ndarray, tau: float) -> np.ndarray:
    """Euclidean projection onto {w : sum (w_i - w0_i)^2 / w0_i <= tau}.

    The projected point is w_i(nu) = (w0_i v_i + 2 nu w0_i) / (w0_i + 2 nu)
    and the divergence g(nu) is convex decreasing, so Newton from nu = 0
    climbs monotonically to the root of g(nu) = tau.
    """
    d2 = (v - w0) ** 2 * w0
    if float(np.sum(d2 / w0 ** 2)) <= tau:
        return v.copy()
    nu = 0.0
    for _ in range(80):
        den = w0 + 2.0 * nu
        g = float(np.sum(d2 / den ** 2))
        if g <= tau * (1.0 + 1e-14):
            break
        gp = -4.0 * float(np.sum(d2 / den ** 3))
        step = (g - tau) / gp
        if not math.isfinite(step) or nu - step <= nu:
            break
        nu -= step
    den = w0 + 2.0 * nu
    return (w0 * v + 2.0 * nu * w0) / den


def _dykstra_project(v: np.ndarray, w0: np.ndarray, tau: float,
                     sweeps: int = 400, tol: float = 1e-12) -> np.ndarray:
    """Dykstra alternating projections onto simplex intersect chi-square ball.

    Converged when the two projection outputs agree; watching only one
    iterate is unsound, it sits still through vertex-pinned transients
    while the correction terms drift.
    """
    x = v.copy()
    p = np.zeros_like(v)
    q = np.zeros_like(v)
    for _ in range(sweeps):
        y = _project_simplex(x + p)
        p = x + p - y
        x = _project_chi2_ball(y + q, w0, tau)
        q = y + q - x
        if np.linalg.norm(y - x) <= tol:
            break
    return x


def _repair_feasible(w: np.ndarray, w0: np.ndarray, tau: float) -> np.ndarray:
    """Pull a near-feasible point exactly into simplex intersect ball.

    Simplex projection first, then a contraction toward the center w0, which
    stays inside the simplex and scales the divergence by the square of the
    contraction factor.
    """
    w = _project_simplex(w)
    div = phi_divergence(w, w0)
    if div > tau:
        s = math.sqrt(tau / div) * (1.0 - 1e-12)
        w = w0 + s * (w - w0)
    return w


def _ascent_seed(f: np.ndarray, w0: np.ndarray, tau: float,
                 iters: int = 40) -> np.ndarray:
    """Projected gradient ascent for max_w f^T w over the ambiguity set."""
    scale = max(np.ptp(f), 1e-12)
    w = w0.copy()
    best_w, best_val = w, float(f @ w)
    for k in range(iters):
        step = 0.5 / (scale * math.sqrt(k + 1.0))
        w = _repair_feasible(_dykstra_project(w + step * f, w0, tau), w0, tau)
        val = float(f @ w)
        if val > best_val:
            best_val, best_w = val, w
    return best_w


# ---------------------------------------------------------------------------
# worst-case expectation, primal route

def _active_set_max(f: np.ndarray, w0: np.ndarray, tau: float):
    """Exact maximizer of f^T w over the simplex-chi2 intersection.

    The optimal support is a superlevel set of f. On the support F the KKT
    system gives w_i = w0_i (1 + (f_i - mu) / (2 rho)) with mu and rho fixed
    by sum w = 1 and the divergence ball being active:
        mu  = (m1 - 2 rho (1 - W0)) / W0,
        rho^2 = V W0 / (4 ((tau + 1) W0 - 1)),
    where W0 = sum_F w0, m1 = sum_F w0 f, V = sum_F w0 f^2 - m1^2 / W0.
    Excluded indices need f_i <= mu - 2 rho. We sweep supports at the ends of
    tied value groups, so ties are never split.
    """
    n = f.size
    order = np.argsort(-f, kind="stable")
    fs, ws = f[order], w0[order]
    ends = [k for k in range(1, n) if fs[k - 1] > fs[k] + 1e-15 * (1.0 + abs(fs[k]))]
    ends.append(n)
    span = max(np.ptp(f), 1.0)
    for k in ends:
        W0 = float(np.sum(ws[:k]))
        m1 = float(ws[:k] @ fs[:k])
        denom = (tau + 1.0) * W0 - 1.0
        if denom <= 1e-15:
            continue
        V = float(ws[:k] @ fs[:k] ** 2) - m1 * m1 / W0
        if V <= 1e-24 * span * span:
            # constant payoff on the support: mass concentrates there when
            # the proportional weight w0/W0 stays inside the ball
            if tau + 1e-12 >= (1.0 - W0) / W0:
                wk = ws[:k] / W0
                mu, rho = fs[0], 0.0
            else:
                continue
        else:
            rho = math.sqrt(V * W0 / (4.0 * denom))
            mu = (m1 - 2.0 * rho * (1.0 - W0)) / W0
            wk = ws[:k] * (1.0 + (fs[:k] - mu) / (2.0 * rho))
            if np.min(wk) < -1e-11:
                continue
        if k < n and fs[k] > mu - 2.0 * rho + 1e-9 * span:
            continue
        w = np.zeros(n)
        w[order[:k]] = np.maximum(wk, 0.0)
        w /= w.sum()
        return float(f @ w), w
    return None


def _worst_expectation(f: np.ndarray, w0: np.ndarray, tau: float,
                       cross_check: bool):
    n = f.size
    if tau == 0.0 or n == 1:
        return float(f @ w0), w0.copy()
    if np.ptp(f) <= 1e-15 * (1.0 + np.max(np.abs(f))):
        return float(f @ w0), w0.copy()
    exact = _active_set_max(f, w0, tau)
    if exact is not None and not cross_check:
        return exact
    w_seed = _ascent_seed(f, w0, tau)
    seed_val = float(f @ w_seed)
    if exact is None:
        return seed_val, w_seed
    val, w = exact
    # the ascent iterate is feasible, so it can never beat the exact optimum
    if seed_val > val + 1e-7 * (1.0 + abs(val)):
        return seed_val, w_seed
    return val, w


def worst_case_expectation_primal(values, w0, tau: float):
    """Worst-case expectation max {f^T w : w in simplex, chi2(w, w0) <= tau}.

    Returns (value, weights). The weights realize the value and lie in the
    ambiguity set up to roundoff. The exact active-set optimum is cross
    checked against a projected-ascent iterate, which being feasible gives a
    certified lower bound.
    """
    f = np.asarray(values, dtype=float).ravel()
    w0 = np.asarray(w0, dtype=float).ravel()
    if f.shape != w0.shape:
        raise ValueError("values and w0 must have the same length")
    if tau < 0.0:
        raise ValueError("tau must be nonnegative")
    return _worst_expectation(f, w0, tau, cross_check=True)


# ---------------------------------------------------------------------------
# worst-case expectation, dual route

def worst_case_expectation_dual(values, w0, tau: float) -> float:
    """Dual value min_{lam >= 0, eta} tau lam + eta + lam sum w0 phi*((f-eta)/lam).

    The objective is jointly convex, so nested golden-section search (outer in
    lam, inner in eta) converges to the global minimum. Requires tau > 0.
    """
    f = np.asarray(values, dtype=float).ravel()
    w0 = np.asarray(w0, dtype=float).ravel()
    if tau <= 0.0:
        raise ValueError("the dual route requires tau > 0")
    fmin, fmax = float(np.min(f)), float(np.max(f))
    if fmax - fmin <= 1e-15 * (1.0 + abs(fmax)):
        return fmax

    def inner(lam: float) -> float:
        def g(eta: float) -> float:
            return tau * lam + eta + lam * float(w0 @ phi_star((f - eta) / lam))

        lo = fmin - 2.0 * lam - 1.0
        hi = fmax + 2.0 * lam + 1.0
        return _golden(g, lo, hi, iters=140)[1]

    span = fmax - fmin
    lam_lo = 1e-11 * (1.0 + span)
    lam_hi = 10.0 * (1.0 + span) / min(tau, 1.0)
    for _ in range(60):
        lam, val = _golden(inner, lam_lo, lam_hi, iters=140)
        if lam < lam_lo + 0.01 * (lam_hi - lam_lo):
            lam_hi = lam_lo + 0.1 * (lam_hi - lam_lo)
        elif lam > lam_hi - 0.01 * (lam_hi - lam_lo):
            lam_lo, lam_hi = lam_hi * 0.5, lam_hi * 4.0
        else:
            return val
    return val


# ---------------------------------------------------------------------------
# worst-case CVaR

def worst_case_cvar(values, risk: RiskSpec):
    """Worst-case smoothed CVaR of the payoff sample under a risk spec.

    Minimizes alpha + (1 - gamma)^{-1} * WorstExp(Upsilon_k(f - alpha)) over
    alpha by scalar search; the objective is convex in alpha and the smoothing
    loss is linear outside [-h, h], so the minimizer lies within bandwidth of
    the payoff range. Returns (value, alpha_star).
    """
    f = np.asarray(values, dtype=float).ravel()
    if f.size != risk.n:
        raise ValueError("values length must match the risk weight count")
    h = risk.kernel.bandwidth
    inv = 1.0 / (1.0 - risk.gamma)
    w0 = risk.w0

    def objective(alpha: float) -> float:
        # hot loop of the alpha search: skip the ascent cross-check here,
        # the exact active-set value is already the optimum
        tail = _worst_expectation(upsilon(risk.kernel, f - alpha),
                                  w0, risk.tau, cross_check=False)[0]
        return alpha + inv * tail

    lo = float(np.min(f)) - 2.0 * h
    hi = float(np.max(f)) + 2.0 * h
    alpha, val = _golden(objective, lo, hi, iters=140)
    return val, alpha


def empirical_cvar(values, w0, gamma: float) -> float:
    """Discrete (unsmoothed) weighted CVaR min_a a + sum w [f - a]_+ / (1-gamma).

    The objective is piecewise linear and convex, so the minimum is attained
    at a sample point.
    """
    f = np.asarray(values, dtype=float).ravel()
    w = np.asarray(w0, dtype=float).ravel()
    inv = 1.0 / (1.0 - gamma)
    vals = [a + inv * float(w @ np.maximum(f - a, 0.0)) for a in f]
    return min(vals)


# ---------------------------------------------------------------------------
# end-to-end validation of a solver result

@dataclass(frozen=True)
class ValidationReport:
    """Outcome of re-checking a solver result against the oracles.

    checks holds (name, measured, tolerance, passed) tuples where passed
    means |measured| <= tolerance; recomputed holds the oracle values
    (worst_mean, worst_cvar).
    """

    checks: tuple
    worst_weights: np.ndarray
    recomputed: tuple
    warnings: tuple = field(default=())

    @property
    def passed(self) -> bool:
        return all(item[3] for item in self.checks)

    def to_text(self) -> str:
        lines = []
        for name, measured, tol, ok in self.checks:
            status = "PASS" if ok else "FAIL"
            lines.append(f"{status}  {name}: measured={measured:.6e} tolerance={tol:.6e}")
        for msg in self.warnings:
            lines.append(f"WARN  {msg}")
        mean, cvar = self.recomputed
        lines.append(f"recomputed worst mean = {mean:.9g} J, worst cvar = {cvar:.9g} J")
        return "\n".join(lines)


def validate_solution(model: TrussModel, samples, risk: RiskSpec, nu: float,
                      design: Design, alpha: float,
                      claimed_worst_mean=None) -> ValidationReport:
    """Recompute compliances and worst-case statistics for a returned design.

    Checks the design against the admissible set, the worst-case mean against
    the claimed objective when one is provided, and the worst-case CVaR (both
    the oracle optimum over alpha and the CVaR functional at the solver's own
    alpha) against the budget nu. Failed checks mark the report as not passed;
    this function does not raise on them.
    """
    x = np.asarray(design.x, dtype=float)
    if x.shape != (model.n_members,):
        raise ValueError("design dimension must equal the member count")
    checks = []
    warnings = []

    xmin = float(np.min(x, initial=0.0))
    checks.append(("design_nonnegative", max(0.0, -xmin),
                   1e-8 * (1.0 + float(np.max(np.abs(x), initial=0.0)))))
    vol = member_volume(model, x)
    checks.append(("volume_within_cap", max(0.0, vol - model.volume_cap),
                   1e-8 * (1.0 + model.volume_cap)))

    loads = expand_loads(model, samples.samples_kN, samples.loaded_dofs)
    comps = np.array([compliance(model, design, xi) for xi in loads])
    n_bad = int(np.count_nonzero(~np.isfinite(comps)))
    checks.append(("compliance_finite", float(n_bad), 0.0))

    if n_bad:
        worst_mean, worst_cv = math.inf, math.inf
        wstar = risk.w0.copy()
    else:
        worst_mean, wstar = worst_case_expectation_primal(comps, risk.w0, risk.tau)
        worst_cv, _ = worst_case_cvar(comps, risk)
        if claimed_worst_mean is not None:
            checks.append(("worst_mean_matches_objective",
                           abs(worst_mean - float(claimed_worst_mean)),
                           1e-5 * (1.0 + abs(float(claimed_worst_mean)))))
        tol_nu = 1e-5 * (1.0 + abs(nu))
        checks.append(("worst_cvar_within_budget",
                       max(0.0, worst_cv - nu), tol_nu))
        inv = 1.0 / (1.0 - risk.gamma)
        tail = worst_case_expectation_primal(
            upsilon(risk.kernel, comps - alpha), risk.w0, risk.tau)[0]
        checks.append(("cvar_at_solver_alpha_within_budget",
                       max(0.0, alpha + inv * tail - nu), tol_nu))
        if risk.tau > 0.0 and float(np.min(wstar)) <= 1e-9:
            warnings.append("worst-case weights touch the simplex boundary; "
                            "the ambiguity ball is not interior here")

    done = tuple((name, m, t, abs(m) <= t) for name, m, t in checks)
    return ValidationReport(checks=done, worst_weights=wstar,
                            recomputed=(float(worst_mean), float(worst_cv)),
                            warnings=tuple(warnings))
