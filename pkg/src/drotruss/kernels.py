"""Scalar risk machinery: kernels, the smoothed positive-part transform,
the modified chi-square divergence and its conjugate, weighted KDE, and the
smoothed CVaR functional.

All compliance-domain quantities (sample values, bandwidth h, alpha) are in
joules. Kernels live on the normalized support [-1, 1] and integrate to 1.

The central object is the smoothed positive-part transform

    Upsilon_k(c) = integral of [c - y]_+ against the scaled kernel (1/h) k(y/h),

equivalently Upsilon_k(c) = h * psi_k(c/h) with psi_k(u) = u*G_k(u) - Gt_k(u),
where G_k is the kernel CDF and Gt_k the partial first moment. Upsilon is
convex, nondecreasing, zero left of -h and exactly the identity right of +h;
replacing [f - alpha]_+ by Upsilon(f - alpha) in the CVaR formula is what the
kernel-density smoothing of the loss distribution amounts to.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

UNIFORM = "uniform"
TRIANGULAR = "triangular"
KERNEL_KINDS = (UNIFORM, TRIANGULAR)


@dataclass(frozen=True)
class Kernel:
    """Kernel choice plus bandwidth (same units as compliance, J)."""

    kind: str
    bandwidth: float

    def __post_init__(self) -> None:
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}; expected one of {KERNEL_KINDS}")
        if not (self.bandwidth > 0 and np.isfinite(self.bandwidth)):
            raise ValueError(f"bandwidth must be positive and finite, got {self.bandwidth}")


@dataclass(frozen=True)
class RiskSpec:
    """Risk-measure parameters: kernel, confidence gamma, divergence budget tau,
    and the center weight vector w0 (a simplex point, one weight per sample)."""

    kernel: Kernel
    gamma: float
    tau: float
    w0: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if not (0.0 <= self.gamma < 1.0):
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        if not (self.tau >= 0.0):
            raise ValueError(f"tau must be nonnegative, got {self.tau}")
        w0 = np.asarray(self.w0, dtype=float)
        object.__setattr__(self, "w0", w0)
        check_weights(w0)

    @property
    def n(self) -> int:
        return self.w0.shape[0]


def uniform_weights(n: int) -> np.ndarray:
    """The default center w0 = (1/n, ..., 1/n)."""
    if n < 1:
        raise ValueError("need at least one sample weight")
    return np.full(n, 1.0 / n)


def check_weights(w: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Validate a simplex weight vector (nonnegative, sums to one)."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.size < 1:
        raise ValueError("weight vector must be a nonempty 1-d array")
    if np.any(w < -tol):
        raise ValueError(f"weights must be nonnegative, min is {w.min()}")
    s = float(w.sum())
    if abs(s - 1.0) > tol * max(1.0, abs(s)):
        raise ValueError(f"weights must sum to 1, got {s}")
    return w


def kernel_value(kernel: Kernel, y):
    """k(y) on the normalized support [-1, 1] (dimensionless argument)."""
    y = np.asarray(y, dtype=float)
    inside = np.abs(y) <= 1.0
    if kernel.kind == UNIFORM:
        return np.where(inside, 0.5, 0.0)
    return np.where(inside, 1.0 - np.abs(y), 0.0)


def upsilon(kernel: Kernel, c):
    """Smoothed positive-part transform Upsilon_k(c), c in J.

    Closed forms (h = bandwidth):
      uniform:    0 for c < -h; (c+h)^2/(4h) on [-h, h); c for c >= h
      triangular: 0 for c < -h; (c+h)^3/(6h^2) on [-h, 0);
                  (h-c)^3/(6h^2) + c on [0, h); c for c >= h
    """
    h = kernel.bandwidth
    c = np.asarray(c, dtype=float)
    if kernel.kind == UNIFORM:
        mid = (c + h) ** 2 / (4.0 * h)
        out = np.where(c < -h, 0.0, np.where(c < h, mid, c))
    else:
        lo = (c + h) ** 3 / (6.0 * h * h)
        hi = (h - c) ** 3 / (6.0 * h * h) + c
        out = np.where(c < -h, 0.0, np.where(c < 0.0, lo, np.where(c < h, hi, c)))
    return out if out.ndim else float(out)


def upsilon_components(kernel: Kernel, c):
    """Return (G_k(u), Gt_k(u), psi_k(u)) at u = c/h.

    G_k is the kernel CDF, Gt_k(u) = integral of y k(y) up to u, and
    psi_k(u) = u G_k(u) - Gt_k(u), so that Upsilon_k(c) = h * psi_k(c/h).
    """
    h = kernel.bandwidth
    u = np.asarray(c, dtype=float) / h
    if kernel.kind == UNIFORM:
        G = np.clip((u + 1.0) / 2.0, 0.0, 1.0)
        Gt = np.where(np.abs(u) < 1.0, (u * u - 1.0) / 4.0, 0.0)
    else:
        G = np.where(
            u < -1.0,
            0.0,
            np.where(
                u < 0.0,
                (u + 1.0) ** 2 / 2.0,
                np.where(u < 1.0, 0.5 + u - u * u / 2.0, 1.0),
            ),
        )
        Gt = np.where(
            (u <= -1.0) | (u >= 1.0),
            0.0,
            np.where(
                u < 0.0,
                u * u / 2.0 + u ** 3 / 3.0 - 1.0 / 6.0,
                u * u / 2.0 - u ** 3 / 3.0 - 1.0 / 6.0,
            ),
        )
    psi = u * G - Gt
    if psi.ndim:
        return G, Gt, psi
    return float(G), float(Gt), float(psi)


def phi_star(s):
    """Conjugate of the modified chi-square divergence generator:
    phi*(s) = 1/4 ([s+2]_+)^2 - 1. Nondecreasing; phi*(-2) = -1, phi*(0) = 0."""
    s = np.asarray(s, dtype=float)
    out = 0.25 * np.maximum(s + 2.0, 0.0) ** 2 - 1.0
    return out if out.ndim else float(out)


def phi_divergence(w: np.ndarray, w0: np.ndarray) -> float:
    """Modified chi-square divergence I_phi(w, w0) = sum_i w0_i phi(w_i/w0_i)
    with phi(t) = (t-1)^2 for t >= 0 and +inf for t < 0, under the usual
    0*phi(a/0) and 0*phi(0/0) conventions."""
    w = np.asarray(w, dtype=float)
    w0 = np.asarray(w0, dtype=float)
    if w.shape != w0.shape:
        raise ValueError("weight vectors must have matching shapes")
    if np.any(w < 0.0):
        return float("inf")
    zero_center = w0 <= 0.0
    if np.any(zero_center & (w > 0.0)):
        return float("inf")
    pos = ~zero_center
    d = w[pos] - w0[pos]
    return float(np.sum(d * d / w0[pos]))


def kde_pdf(values: np.ndarray, w: np.ndarray, kernel: Kernel, y):
    """Weighted kernel density estimate (1/h) sum_i w_i k((y - f_i)/h), 1/J."""
    values = np.asarray(values, dtype=float)
    w = np.asarray(w, dtype=float)
    if values.shape != w.shape:
        raise ValueError("values and weights must have matching shapes")
    h = kernel.bandwidth
    y = np.asarray(y, dtype=float)
    arg = (y[..., None] - values) / h
    out = np.sum(w * kernel_value(kernel, arg), axis=-1) / h
    return out if out.ndim else float(out)


def kde_cdf(values: np.ndarray, w: np.ndarray, kernel: Kernel, y):
    """CDF of the weighted KDE: sum_i w_i G_k((y - f_i)/h)."""
    values = np.asarray(values, dtype=float)
    w = np.asarray(w, dtype=float)
    h = kernel.bandwidth
    y = np.asarray(y, dtype=float)
    u = (y[..., None] - values)
    G, _, _ = upsilon_components(Kernel(kernel.kind, h), u)
    out = np.sum(w * np.asarray(G), axis=-1)
    return out if out.ndim else float(out)


def cvar_functional(values: np.ndarray, w: np.ndarray, kernel: Kernel, gamma: float, alpha) -> float:
    """Smoothed CVaR objective F(alpha) = alpha + (1/(1-gamma)) sum_i w_i Upsilon_k(f_i - alpha).

    Convex in alpha; its minimum over alpha is the smoothed CVaR of the
    weighted sample distribution at confidence gamma.
    """
    values = np.asarray(values, dtype=float)
    w = np.asarray(w, dtype=float)
    if values.shape != w.shape:
        raise ValueError("values and weights must have matching shapes")
    if not (0.0 <= gamma < 1.0):
        raise ValueError(f"gamma must lie in [0, 1), got {gamma}")
    alpha_arr = np.asarray(alpha, dtype=float)
    tail = np.sum(w * upsilon(kernel, values - alpha_arr[..., None]), axis=-1)
    out = alpha_arr + tail / (1.0 - gamma)
    return out if out.ndim else float(out)
