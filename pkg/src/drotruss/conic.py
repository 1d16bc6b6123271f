"""Standard-form conic program container, structural diagnostics, and a
plain-text export format for cross-solver verification.

The canonical form is

    minimize    c^T x
    subject to  A x = b
                G x + s = h,   s in K

where K is an ordered product of nonnegative-orthant and second-order cone
blocks partitioning the slack vector s. A second-order block of dimension d
is {(t, v) in R^d : t >= ||v||_2}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

NONNEG = "nonneg"
SOC = "soc"


@dataclass(frozen=True)
class Cone:
    kind: str
    dim: int

    def __post_init__(self) -> None:
        if self.kind not in (NONNEG, SOC):
            raise ValueError(f"unknown cone kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("cone dimension must be at least 1")
        if self.kind == SOC and self.dim < 2:
            raise ValueError("second-order cones need dimension >= 2")


@dataclass(frozen=True)
class ConeProgram:
    """Immutable conic program in the canonical form above."""

    c: np.ndarray
    A: sp.csc_matrix          # (p, n); p may be 0
    b: np.ndarray
    G: sp.csc_matrix          # (m, n); m >= 1
    h: np.ndarray
    cones: tuple
    var_names: tuple | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        c = np.asarray(self.c, dtype=float).ravel()
        n = c.size
        A = sp.csc_matrix(self.A, dtype=float) if self.A is not None else sp.csc_matrix((0, n))
        b = np.asarray(self.b, dtype=float).ravel() if self.b is not None else np.zeros(0)
        G = sp.csc_matrix(self.G, dtype=float)
        h = np.asarray(self.h, dtype=float).ravel()
        cones = tuple(self.cones)
        if n < 1:
            raise ValueError("program needs at least one variable")
        if A.shape != (b.size, n):
            raise ValueError(f"equality block shape {A.shape} inconsistent with b ({b.size}) and n ({n})")
        if G.shape != (h.size, n):
            raise ValueError(f"cone block shape {G.shape} inconsistent with h ({h.size}) and n ({n})")
        if sum(cone.dim for cone in cones) != h.size:
            raise ValueError("cone dimensions must partition the slack vector")
        if h.size < 1:
            raise ValueError("program needs at least one cone row")
        if self.var_names is not None and len(self.var_names) != n:
            raise ValueError("var_names length must equal the variable count")
        for name, arr in (("c", c), ("b", b), ("h", h)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
        c.flags.writeable = False
        b.flags.writeable = False
        h.flags.writeable = False
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "cones", cones)
        if self.var_names is not None:
            object.__setattr__(self, "var_names", tuple(self.var_names))

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_eq(self) -> int:
        return self.b.size

    @property
    def n_cone_rows(self) -> int:
        return self.h.size

    def cone_slices(self):
        """[(kind, start, stop)] row ranges of each cone block."""
        out = []
        start = 0
        for cone in self.cones:
            out.append((cone.kind, start, start + cone.dim))
            start += cone.dim
        return out

    def name_of(self, j: int) -> str:
        if self.var_names is not None:
            return self.var_names[j]
        return f"x[{j}]"


@dataclass(frozen=True)
class Solution:
    """Solver result. For optimal status, primal/dual iterates satisfy the
    feasibility and gap tolerances; for infeasible statuses the fields carry
    the certificate ray instead."""

    status: str                 # optimal | primal_infeasible | dual_infeasible | max_iter | numerical_failure
    primal: np.ndarray | None
    dual_eq: np.ndarray | None
    dual_cone: np.ndarray | None
    slack: np.ndarray | None
    objective: float
    gap: float
    iterations: int
    primal_residual: float = float("nan")
    dual_residual: float = float("nan")


def validate(program: ConeProgram) -> list:
    """Pure structural report: a list of diagnostic strings (empty when the
    program looks well formed)."""
    issues = []
    n = program.n_vars
    # cone partition consistency is enforced at construction; recheck cheaply
    if sum(c.dim for c in program.cones) != program.n_cone_rows:
        issues.append("cone dimensions do not sum to the slack length")
    for k, cone in enumerate(program.cones):
        if cone.dim < 1 or (cone.kind == SOC and cone.dim < 2):
            issues.append(f"cone {k} ({cone.kind}) has invalid dimension {cone.dim}")

    A_csr = program.A.tocsr()
    G_csr = program.G.tocsr()
    row_nnz_a = np.diff(A_csr.indptr)
    row_nnz_g = np.diff(G_csr.indptr)
    for i in np.nonzero(row_nnz_a == 0)[0]:
        issues.append(f"equality row {i} is all zero (rhs {program.b[i]:g})")
    for i in np.nonzero(row_nnz_g == 0)[0]:
        issues.append(f"cone row {i} is all zero (rhs {program.h[i]:g})")

    col_nnz = np.diff(program.A.indptr) + np.diff(program.G.indptr)
    for j in np.nonzero(col_nnz == 0)[0]:
        if program.c[j] == 0.0:
            issues.append(f"variable {program.name_of(j)} appears in no constraint and has zero cost")
        else:
            issues.append(f"variable {program.name_of(j)} has cost {program.c[j]:g} but appears in no "
                          "constraint: objective is unbounded along it")
    return issues


# ---------------------------------------------------------------------------
# Plain-text export (17 significant digits; round-trips bit-exactly)
# ---------------------------------------------------------------------------

_FMT = "{:.17g}"


def export_program(program: ConeProgram) -> str:
    """Serialize to the documented text format for cross-solver checks."""
    out = ["conic-program v1", f"vars {program.n_vars}", f"cones {len(program.cones)}"]
    for cone in program.cones:
        out.append(f"{cone.kind} {cone.dim}")
    nz = np.nonzero(program.c)[0]
    out.append(f"objective {nz.size}")
    for j in nz:
        out.append(f"{j} " + _FMT.format(program.c[j]))
    A = program.A.tocoo()
    out.append(f"eq {program.n_eq} {A.nnz}")
    for i, j, v in zip(A.row, A.col, A.data):
        out.append(f"{i} {j} " + _FMT.format(v))
    nz = np.nonzero(program.b)[0]
    out.append(f"eq_rhs {nz.size}")
    for i in nz:
        out.append(f"{i} " + _FMT.format(program.b[i]))
    G = program.G.tocoo()
    out.append(f"ineq {program.n_cone_rows} {G.nnz}")
    for i, j, v in zip(G.row, G.col, G.data):
        out.append(f"{i} {j} " + _FMT.format(v))
    nz = np.nonzero(program.h)[0]
    out.append(f"ineq_rhs {nz.size}")
    for i in nz:
        out.append(f"{i} " + _FMT.format(program.h[i]))
    return "\n".join(out) + "\n"


def parse_program(text: str) -> ConeProgram:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "conic-program v1":
        raise ValueError("not a conic-program v1 document")
    pos = 1

    def take():
        nonlocal pos
        line = lines[pos]
        pos += 1
        return line

    n = int(take().split()[1])
    n_cones = int(take().split()[1])
    cones = []
    for _ in range(n_cones):
        kind, dim = take().split()
        cones.append(Cone(kind, int(dim)))
    c = np.zeros(n)
    for _ in range(int(take().split()[1])):
        j, v = take().split()
        c[int(j)] = float(v)
    p, nnz = (int(t) for t in take().split()[1:])
    rows, cols, vals = [], [], []
    for _ in range(nnz):
        i, j, v = take().split()
        rows.append(int(i)); cols.append(int(j)); vals.append(float(v))
    A = sp.coo_matrix((vals, (rows, cols)), shape=(p, n)).tocsc()
    b = np.zeros(p)
    for _ in range(int(take().split()[1])):
        i, v = take().split()
        b[int(i)] = float(v)
    m, nnz = (int(t) for t in take().split()[1:])
    rows, cols, vals = [], [], []
    for _ in range(nnz):
        i, j, v = take().split()
        rows.append(int(i)); cols.append(int(j)); vals.append(float(v))
    G = sp.coo_matrix((vals, (rows, cols)), shape=(m, n)).tocsc()
    h = np.zeros(m)
    for _ in range(int(take().split()[1])):
        i, v = take().split()
        h[int(i)] = float(v)
    return ConeProgram(c, A, b, G, h, tuple(cones))
