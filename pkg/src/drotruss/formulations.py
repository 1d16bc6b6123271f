"""Assembly of the robust truss design programs in standard conic form.

Every builder returns a ProblemInstance holding an immutable ConeProgram plus
a var_map of named index arrays into the primal vector. Variable ordering is
sample-major: global head variables first (x and the scalar duals), then one
contiguous block per load sample, which gives the KKT systems a block-arrow
sparsity pattern and makes exported programs reproducible byte for byte.

Variable counts by variant (m members, n samples):

    compliance_min            3m
    dro_mean_cvar uniform     m + 5 + 9n  + 2nm
    dro_mean_cvar triangular  m + 5 + 14n + 2nm
    tau0 uniform              m + 1 + 3n  + 2nm
    tau0 triangular           m + 1 + 8n  + 2nm
    cvar_min uniform          m + 3 + 6n  + 2nm
    cvar_min triangular       m + 3 + 11n + 2nm
    mean_min                  m + 2 + 3n  + 2nm
    mean_min tau=0            m + 2nm

Member variables are stored pre-scaled: the primal vector holds
X = s*x, B = b/s and Q = sqrt(2l/E)*q, where the deterministic scale s is
derived from the compliance of the uniform feasible design. A member cone is
then simply (B + X, B - X, Q) with every coefficient +-1, and both the
iterate values and the matrix coefficients inside each cone block are
balanced. The scales reappear in rows that can each be rescaled freely
(equilibrium equalities, the volume row, coupling and objective rows), which
the solver's equilibration then handles. Without this, raw SI units put
five or more orders of magnitude inside one cone vector (x ~ 1e-4 m^2
against q ~ 1e5 N) and the cone residual cannot be resolved past ~1e-3 in
doubles; equilibration scales rows uniformly within a cone block, so it
cannot repair imbalance inside a block and it has to be fixed here. The
cube/square cones of the triangular kernel carry bandwidth-derived scales
for the same reason. extract_design undoes the x scaling; b and q are
internal and never read back out.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .conic import NONNEG, SOC, Cone, ConeProgram
from .kernels import UNIFORM, RiskSpec
from .oracles import worst_case_cvar, worst_case_expectation_primal
from .truss import Design, TrussModel, compliance, expand_loads

__all__ = [
    "ProblemInstance",
    "build_compliance_min",
    "build_dro_mean_cvar",
    "build_dro_mean_cvar_tau0",
    "build_min_worstcase_cvar",
    "build_min_worstcase_mean",
    "build_phi_star_program",
    "build_upsilon_program_triangular",
    "build_upsilon_program_uniform",
    "extract_design",
    "model_fingerprint",
]

_UNIFORM_FIELDS = ("c_a", "c_q", "s")
_TRIANGULAR_FIELDS = ("c_c1", "c_c2", "c_a", "s1", "s2", "s3", "r1", "r2")


def model_fingerprint(model: TrussModel) -> str:
    """Short deterministic content hash identifying a truss model."""
    hsh = hashlib.sha256()
    for arr in (model.nodes, model.members, model.fixed):
        hsh.update(np.ascontiguousarray(arr).tobytes())
    hsh.update(np.float64([model.young_modulus, model.volume_cap]).tobytes())
    return hsh.hexdigest()[:16]


@dataclass(frozen=True)
class ProblemInstance:
    """A built conic program together with its variable layout and context.

    var_map maps symbol names to integer index arrays into the primal
    vector; per-sample symbols have shape (n,) and member blocks (n, m).
    The slices are disjoint and cover every variable.
    """

    program: ConeProgram
    var_map: dict
    meta: dict
    model: TrussModel = None
    samples: object = None

    def __post_init__(self) -> None:
        idx = np.concatenate([np.asarray(v).ravel() for v in self.var_map.values()])
        if np.unique(idx).size != idx.size:
            raise ValueError("var_map slices overlap")
        if idx.size != self.program.n_vars:
            raise ValueError("var_map does not cover all variables")

    def indices(self, name: str) -> np.ndarray:
        return self.var_map[name]


# ---------------------------------------------------------------------------
# layout and assembly helpers

def _sample_layout(m: int, n: int, heads, fields):
    """Sample-major variable layout.

    x fills [0, m), head scalars follow, then n contiguous per-sample blocks
    each holding the scalar fields then b (m) then q (m). Returns
    (n_vars, var_map, var_names).
    """
    k = len(fields)
    block = k + 2 * m
    base = m + len(heads)
    var_map = {"x": np.arange(m)}
    names = [f"x[{j}]" for j in range(m)]
    for t, name in enumerate(heads):
        var_map[name] = np.array([m + t])
        names.append(name)
    starts = base + block * np.arange(n)
    for p, name in enumerate(fields):
        var_map[name] = starts + p
    var_map["b"] = starts[:, None] + k + np.arange(m)[None, :]
    var_map["q"] = starts[:, None] + k + m + np.arange(m)[None, :]
    for i in range(n):
        names.extend(f"{name}[{i}]" for name in fields)
        names.extend(f"b[{i},{j}]" for j in range(m))
        names.extend(f"q[{i},{j}]" for j in range(m))
    return base + block * n, var_map, tuple(names)


class _Assembler:
    """Accumulates objective, equality and cone rows as COO triplets.

    Inequality convention: ge(cols, vals, rhs) encodes sum(vals*v) >= rhs as
    a nonnegative slack row. soc(entries) appends one second-order block;
    each entry (cols, vals, const) encodes the row value const + sum(vals*v).
    """

    def __init__(self, n_vars: int, names=None):
        self.n = n_vars
        self.c = np.zeros(n_vars)
        self.names = names
        self._eq = ([], [], [])
        self._beq = []
        self._nn = ([], [], [])
        self._hnn = []
        self._soc = ([], [], [])
        self._hsoc = []
        self._soc_dims = []

    def eq(self, cols, vals, rhs: float) -> None:
        r = len(self._beq)
        for j, v in zip(cols, vals):
            if v != 0.0:
                self._eq[0].append(r)
                self._eq[1].append(int(j))
                self._eq[2].append(float(v))
        self._beq.append(float(rhs))

    def ge(self, cols, vals, rhs: float) -> None:
        r = len(self._hnn)
        for j, v in zip(cols, vals):
            if v != 0.0:
                self._nn[0].append(r)
                self._nn[1].append(int(j))
                self._nn[2].append(-float(v))
        self._hnn.append(-float(rhs))

    def soc(self, entries) -> None:
        for cols, vals, const in entries:
            r = len(self._hsoc)
            for j, v in zip(cols, vals):
                if v != 0.0:
                    self._soc[0].append(r)
                    self._soc[1].append(int(j))
                    self._soc[2].append(-float(v))
            self._hsoc.append(float(const))
        self._soc_dims.append(len(entries))

    def build(self) -> ConeProgram:
        p = len(self._beq)
        A = sp.coo_matrix((self._eq[2], (self._eq[0], self._eq[1])),
                          shape=(p, self.n)).tocsc()
        n_nn = len(self._hnn)
        rows = self._nn[0] + [r + n_nn for r in self._soc[0]]
        cols = self._nn[1] + self._soc[1]
        vals = self._nn[2] + self._soc[2]
        G = sp.coo_matrix((vals, (rows, cols)),
                          shape=(n_nn + len(self._hsoc), self.n)).tocsc()
        h = np.array(self._hnn + self._hsoc, dtype=float)
        cones = []
        if n_nn:
            cones.append(Cone(NONNEG, n_nn))
        cones.extend(Cone(SOC, d) for d in self._soc_dims)
        return ConeProgram(self.c, A, np.array(self._beq), G, h, tuple(cones),
                           var_names=self.names)


# ---------------------------------------------------------------------------
# shared constraint blocks

def _member_scale(model: TrussModel, loads_N: np.ndarray) -> float:
    """Pre-balancing scale for member cones, sqrt(b_scale / x_scale)."""
    x_scale = model.volume_cap / float(np.sum(model.lengths))
    xu = Design(x=np.full(model.n_members, x_scale))
    vals = [compliance(model, xu, xi) for xi in np.atleast_2d(loads_N)]
    finite = [v for v in vals if math.isfinite(v) and v > 0.0]
    if finite:
        pi_ref = float(np.mean(finite))
    else:
        # dimensional fallback when the uniform design cannot carry the loads
        fnorm = float(np.mean(np.linalg.norm(np.atleast_2d(loads_N), axis=1)))
        pi_ref = max(fnorm, 1.0) ** 2 * float(np.max(model.lengths)) / (
            model.young_modulus * x_scale)
    b_scale = max(pi_ref / (2.0 * model.n_members), 1e-300)
    return math.sqrt(b_scale / x_scale)


def _member_blocks(asm: _Assembler, model: TrussModel, x_idx, b_row, q_row,
                   sigma: float) -> None:
    # stored variables are the scaled triple X = sigma*x, B = b/sigma,
    # Q = sqrt(2l/E)*q, so every cone coefficient is exactly +-1; row
    # scaling inside an SOC block must be uniform, so any coefficient
    # spread left here would survive equilibration
    for j in range(model.n_members):
        asm.soc([
            ((b_row[j], x_idx[j]), (1.0, 1.0), 0.0),
            ((b_row[j], x_idx[j]), (1.0, -1.0), 0.0),
            ((q_row[j],), (1.0,), 0.0),
        ])


def _equilibrium(asm: _Assembler, model: TrussModel, q_row, xi_N) -> None:
    # sum_j q_j beta_j = xi in Q = sqrt(2l/E)*q; equality rows scale freely
    coef = np.sqrt(0.5 * model.young_modulus / model.lengths)
    for r in range(model.n_free_dofs):
        col = model.beta[:, r] * coef
        nz = np.nonzero(col)[0]
        asm.eq(q_row[nz], col[nz], float(xi_N[r]))


def _admissible(asm: _Assembler, model: TrussModel, x_idx, sigma: float) -> None:
    for j in range(model.n_members):
        asm.ge((x_idx[j],), (1.0,), 0.0)
    asm.ge(x_idx, -model.lengths / sigma, -model.volume_cap)


def _phi_chain(asm: _Assembler, lam: int, iota, y, z) -> None:
    """Divergence-conjugate chain: z_i >= y_i^2/(4 lam), y_i >= iota_i + 2 lam,
    y_i >= 0, lam >= 0. With objective weight (tau - 1) on lam this encodes
    tau*lam + lam * phi*(iota_i / lam); the folded -lam absorbs the
    conjugate's -1 constant."""
    asm.ge((lam,), (1.0,), 0.0)
    for i in range(len(iota)):
        asm.ge((y[i],), (1.0,), 0.0)
        asm.ge((y[i], iota[i], lam), (1.0, -1.0, -2.0), 0.0)
    for i in range(len(iota)):
        asm.soc([
            ((z[i], lam), (1.0, 1.0), 0.0),
            ((z[i], lam), (1.0, -1.0), 0.0),
            ((y[i],), (1.0,), 0.0),
        ])


def _uniform_kernel_block(asm: _Assembler, bw: float, c_a: int, c_q: int,
                          s: int) -> None:
    # s >= c_q^2/(4h); 0 <= c_q <= 2h; c_a >= 0; epigraph value is c_a + s
    asm.ge((c_a,), (1.0,), 0.0)
    asm.ge((c_q,), (1.0,), 0.0)
    asm.ge((c_q,), (-1.0,), -2.0 * bw)
    asm.soc([
        ((s,), (1.0,), bw),
        ((s,), (1.0,), -bw),
        ((c_q,), (1.0,), 0.0),
    ])


def _triangular_kernel_block(asm: _Assembler, bw: float, c1: int, c2: int,
                             c_a: int, s1: int, s2: int, s3: int, r1: int,
                             r2: int) -> None:
    """Cube epigraphs s_k >= c_k^3 on [0, h] via two rotated cones each,
    plus the constant-shift row s3 + c2 >= 5h/6 and the variable bounds.
    Cone rows carry bandwidth-derived scales so all entries are O(h);
    the epigraph value is c_a + (s1 + s2)/(6 h^2) + s3."""
    for c, s, r in ((c1, s1, r1), (c2, s2, r2)):
        asm.ge((c,), (1.0,), 0.0)
        asm.ge((c,), (-1.0,), -bw)
        # s*c >= r^2 emitted as (s/h^2 + c, s/h^2 - c, 2r/h)
        asm.soc([
            ((s, c), (1.0 / bw ** 2, 1.0), 0.0),
            ((s, c), (1.0 / bw ** 2, -1.0), 0.0),
            ((r,), (2.0 / bw,), 0.0),
        ])
        # r >= c^2 emitted as (r/h + h/4, r/h - h/4, c)
        asm.soc([
            ((r,), (1.0 / bw,), 0.25 * bw),
            ((r,), (1.0 / bw,), -0.25 * bw),
            ((c,), (1.0,), 0.0),
        ])
    asm.ge((c_a,), (1.0,), 0.0)
    asm.ge((s3, c2), (1.0, 1.0), 5.0 * bw / 6.0)


def _kernel_blocks(asm: _Assembler, risk: RiskSpec, vm: dict, i: int) -> None:
    bw = risk.kernel.bandwidth
    if risk.kernel.kind == UNIFORM:
        _uniform_kernel_block(asm, bw, vm["c_a"][i], vm["c_q"][i], vm["s"][i])
    else:
        _triangular_kernel_block(asm, bw, vm["c_c1"][i], vm["c_c2"][i],
                                 vm["c_a"][i], vm["s1"][i], vm["s2"][i],
                                 vm["s3"][i], vm["r1"][i], vm["r2"][i])


def _kernel_epigraph_terms(risk: RiskSpec, vm: dict, i: int):
    """(cols, vals) whose inner product is the kernel epigraph value for
    sample i: c_a + s (uniform) or c_a + (s1+s2)/(6h^2) + s3 (triangular)."""
    bw = risk.kernel.bandwidth
    if risk.kernel.kind == UNIFORM:
        return (vm["c_a"][i], vm["s"][i]), (1.0, 1.0)
    g = 1.0 / (6.0 * bw ** 2)
    return ((vm["c_a"][i], vm["s1"][i], vm["s2"][i], vm["s3"][i]),
            (1.0, g, g, 1.0))


def _kernel_coupling(asm: _Assembler, risk: RiskSpec, vm: dict, i: int,
                     alpha: int, m: int, sigma: float) -> None:
    """Link row between the kernel block and the sample's compliance bound:
    uniform   c_a + c_q >= sum_j 2 b_ij - alpha + h
    triangular c_a + c_c1 - c_c2 >= sum_j 2 b_ij - alpha
    with the compliance read through the stored B = b/sigma variables."""
    b_row = vm["b"][i]
    if risk.kernel.kind == UNIFORM:
        cols = [vm["c_a"][i], vm["c_q"][i], alpha] + list(b_row)
        vals = [1.0, 1.0, 1.0] + [-2.0 * sigma] * m
        asm.ge(cols, vals, risk.kernel.bandwidth)
    else:
        cols = [vm["c_a"][i], vm["c_c1"][i], vm["c_c2"][i], alpha] + list(b_row)
        vals = [1.0, 1.0, -1.0, 1.0] + [-2.0 * sigma] * m
        asm.ge(cols, vals, 0.0)


# ---------------------------------------------------------------------------
# standalone blocks used by the equivalence property tests

def build_upsilon_program_uniform(c: float, bw: float) -> ProblemInstance:
    """Scalar program whose optimal value is the uniform-kernel smoothing
    loss at c: min c_a + s over the epigraph block."""
    var_map = {"c_a": np.array([0]), "c_q": np.array([1]), "s": np.array([2])}
    asm = _Assembler(3, ("c_a", "c_q", "s"))
    asm.c[0] = asm.c[2] = 1.0
    _uniform_kernel_block(asm, bw, 0, 1, 2)
    asm.ge((0, 1), (1.0, 1.0), c + bw)
    return ProblemInstance(asm.build(), var_map,
                           {"variant": "upsilon_uniform", "c": c, "bandwidth": bw})


def build_upsilon_program_triangular(c: float, bw: float) -> ProblemInstance:
    """Scalar program whose optimal value is the triangular-kernel smoothing
    loss at c: min c_a + (s1 + s2)/(6 h^2) + s3."""
    names = _TRIANGULAR_FIELDS
    var_map = {name: np.array([t]) for t, name in enumerate(names)}
    asm = _Assembler(8, names)
    c1, c2, c_a, s1, s2, s3, r1, r2 = range(8)
    asm.c[c_a] = asm.c[s3] = 1.0
    asm.c[s1] = asm.c[s2] = 1.0 / (6.0 * bw ** 2)
    _triangular_kernel_block(asm, bw, c1, c2, c_a, s1, s2, s3, r1, r2)
    asm.ge((c_a, c1, c2), (1.0, 1.0, -1.0), c)
    return ProblemInstance(asm.build(), var_map,
                           {"variant": "upsilon_triangular", "c": c, "bandwidth": bw})


def build_phi_star_program(y: float) -> ProblemInstance:
    """Scalar program whose optimal value is the divergence conjugate at y:
    min z subject to z >= a^2/4 - 1, a >= y + 2, a >= 0.

    The cone is (z + 2, z, a): squaring gives 4z + 4 >= a^2, so the minimum
    lands on the conjugate including its -1 constant.
    """
    var_map = {"z": np.array([0]), "a": np.array([1])}
    asm = _Assembler(2, ("z", "a"))
    asm.c[0] = 1.0
    asm.ge((1,), (1.0,), y + 2.0)
    asm.ge((1,), (1.0,), 0.0)
    asm.soc([
        ((0,), (1.0,), 2.0),
        ((0,), (1.0,), 0.0),
        ((1,), (1.0,), 0.0),
    ])
    return ProblemInstance(asm.build(), var_map,
                           {"variant": "phi_star", "y": y})


# ---------------------------------------------------------------------------
# design programs

def build_compliance_min(model: TrussModel, load_N) -> ProblemInstance:
    """Single-load compliance minimization: min sum_j 2 b_j over the member
    cones, equilibrium, and the admissible set."""
    xi = np.asarray(load_N, dtype=float).ravel()
    if xi.shape != (model.n_free_dofs,):
        raise ValueError("load dimension must equal the number of free dofs")
    m = model.n_members
    var_map = {"x": np.arange(m), "b": np.arange(m, 2 * m),
               "q": np.arange(2 * m, 3 * m)}
    names = tuple(f"{s}[{j}]" for s in ("x", "b", "q") for j in range(m))
    asm = _Assembler(3 * m, names)
    sigma = _member_scale(model, xi[None, :])
    asm.c[var_map["b"]] = 2.0 * sigma
    _admissible(asm, model, var_map["x"], sigma)
    _member_blocks(asm, model, var_map["x"], var_map["b"], var_map["q"], sigma)
    _equilibrium(asm, model, var_map["q"], xi)
    meta = {"variant": "compliance_min", "model_id": model_fingerprint(model),
            "risk": None, "nu": None, "member_scale": sigma}
    return ProblemInstance(asm.build(), var_map, meta, model=model)


def _sample_loads(model: TrussModel, samples, risk: RiskSpec) -> np.ndarray:
    loads = expand_loads(model, samples.samples_kN, samples.loaded_dofs)
    if loads.shape[0] != risk.n:
        raise ValueError("sample count must match the risk weight count")
    return loads


def _meta(model, risk, nu, variant, sigma) -> dict:
    return {"variant": variant, "model_id": model_fingerprint(model),
            "risk": risk, "nu": nu, "kernel": risk.kernel.kind,
            "member_scale": sigma}


def _per_sample_structure(asm, model, risk, vm, loads, sigma, alpha=None):
    """Kernel blocks, coupling rows, member cones and equilibrium for every
    sample. alpha=None skips the kernel machinery (mean-only programs)."""
    for i in range(risk.n):
        if alpha is not None:
            _kernel_blocks(asm, risk, vm, i)
            _kernel_coupling(asm, risk, vm, i, alpha, model.n_members, sigma)
        _member_blocks(asm, model, vm["x"], vm["b"][i], vm["q"][i], sigma)
        _equilibrium(asm, model, vm["q"][i], loads[i])


def build_dro_mean_cvar(model: TrussModel, samples, risk: RiskSpec,
                        nu: float) -> ProblemInstance:
    """Worst-case mean minimization under a worst-case CVaR budget nu, for
    ambiguity radius tau > 0.

    Objective (tau-1)*lambda2 + eta2 + sum_i w0_i z2_i over the conjugate
    chains of both the mean and the CVaR tail, kernel epigraph blocks, the
    budget row (tau-1)*lambda1 + eta1 + sum_i w0_i z1_i <= (1-gamma)(nu-alpha),
    per-sample member cones and equilibrium, and x in the admissible set.
    """
    if risk.tau <= 0.0:
        raise ValueError("this formulation needs tau > 0; "
                         "use build_dro_mean_cvar_tau0 for tau = 0")
    loads = _sample_loads(model, samples, risk)
    n, m = risk.n, model.n_members
    sigma = _member_scale(model, loads)
    kfields = _UNIFORM_FIELDS if risk.kernel.kind == UNIFORM else _TRIANGULAR_FIELDS
    fields = ("iota1", "iota2", "y1", "y2", "z1", "z2") + kfields
    n_vars, vm, names = _sample_layout(
        m, n, ("alpha", "lambda1", "lambda2", "eta1", "eta2"), fields)
    asm = _Assembler(n_vars, names)

    alpha = vm["alpha"][0]
    lam1, lam2 = vm["lambda1"][0], vm["lambda2"][0]
    eta1, eta2 = vm["eta1"][0], vm["eta2"][0]
    asm.c[lam2] = risk.tau - 1.0
    asm.c[eta2] = 1.0
    asm.c[vm["z2"]] = risk.w0

    _admissible(asm, model, vm["x"], sigma)
    _phi_chain(asm, lam2, vm["iota2"], vm["y2"], vm["z2"])
    _phi_chain(asm, lam1, vm["iota1"], vm["y1"], vm["z1"])
    gamma = risk.gamma
    # budget: (1-gamma)(nu - alpha) - (tau-1) lam1 - eta1 - sum w0 z1 >= 0
    cols = [alpha, lam1, eta1] + list(vm["z1"])
    vals = [-(1.0 - gamma), -(risk.tau - 1.0), -1.0] + list(-risk.w0)
    asm.ge(cols, vals, -(1.0 - gamma) * nu)
    for i in range(n):
        # iota2_i >= sum_j 2 b_ij - eta2
        asm.ge([vm["iota2"][i], eta2] + list(vm["b"][i]),
               [1.0, 1.0] + [-2.0 * sigma] * m, 0.0)
        # iota1_i >= (kernel epigraph value) - eta1
        kcols, kvals = _kernel_epigraph_terms(risk, vm, i)
        asm.ge([vm["iota1"][i], eta1] + list(kcols),
               [1.0, 1.0] + [-v for v in kvals], 0.0)
    _per_sample_structure(asm, model, risk, vm, loads, sigma, alpha)
    return ProblemInstance(asm.build(), vm,
                           _meta(model, risk, nu, "dro_mean_cvar", sigma),
                           model=model, samples=samples)


def build_dro_mean_cvar_tau0(model: TrussModel, samples, risk: RiskSpec,
                             nu: float) -> ProblemInstance:
    """The tau = 0 reduction: minimize the plain weighted mean compliance
    subject to the weighted smoothed-CVaR budget.

    The conjugate chains collapse; the budget row becomes
    sum_i w0_i (kernel epigraph value)_i <= (1-gamma)(nu - alpha). The
    epigraph value for the triangular kernel includes the s3 term, matching
    its definition; leaving s3 out would drop the 5h/6 constant shift and
    understate every sample's loss.
    """
    if risk.tau != 0.0:
        raise ValueError("this reduction is only valid at tau = 0")
    loads = _sample_loads(model, samples, risk)
    n, m = risk.n, model.n_members
    sigma = _member_scale(model, loads)
    kfields = _UNIFORM_FIELDS if risk.kernel.kind == UNIFORM else _TRIANGULAR_FIELDS
    n_vars, vm, names = _sample_layout(m, n, ("alpha",), kfields)
    asm = _Assembler(n_vars, names)

    alpha = vm["alpha"][0]
    for i in range(n):
        asm.c[vm["b"][i]] = 2.0 * sigma * risk.w0[i]

    _admissible(asm, model, vm["x"], sigma)
    gamma = risk.gamma
    cols: list = [alpha]
    vals: list = [-(1.0 - gamma)]
    for i in range(n):
        kcols, kvals = _kernel_epigraph_terms(risk, vm, i)
        cols.extend(kcols)
        vals.extend(-risk.w0[i] * v for v in kvals)
    asm.ge(cols, vals, -(1.0 - gamma) * nu)
    _per_sample_structure(asm, model, risk, vm, loads, sigma, alpha)
    return ProblemInstance(asm.build(), vm,
                           _meta(model, risk, nu, "dro_mean_cvar_tau0", sigma),
                           model=model, samples=samples)


def build_min_worstcase_cvar(model: TrussModel, samples,
                             risk: RiskSpec) -> ProblemInstance:
    """Anchor program: minimize the worst-case CVaR itself.

    Objective alpha + ((tau-1)*lambda1 + eta1 + sum_i w0_i z1_i)/(1-gamma)
    over the CVaR-tail chain and kernel blocks of the budgeted program; at
    tau = 0 the chain collapses to the weighted kernel epigraph sum.
    The optimal value anchors the low end of a Pareto sweep.
    """
    loads = _sample_loads(model, samples, risk)
    n, m = risk.n, model.n_members
    sigma = _member_scale(model, loads)
    inv = 1.0 / (1.0 - risk.gamma)
    kfields = _UNIFORM_FIELDS if risk.kernel.kind == UNIFORM else _TRIANGULAR_FIELDS
    if risk.tau > 0.0:
        fields = ("iota1", "y1", "z1") + kfields
        n_vars, vm, names = _sample_layout(
            m, n, ("alpha", "lambda1", "eta1"), fields)
        asm = _Assembler(n_vars, names)
        alpha, lam1, eta1 = vm["alpha"][0], vm["lambda1"][0], vm["eta1"][0]
        asm.c[alpha] = 1.0
        asm.c[lam1] = (risk.tau - 1.0) * inv
        asm.c[eta1] = inv
        asm.c[vm["z1"]] = risk.w0 * inv
        _phi_chain(asm, lam1, vm["iota1"], vm["y1"], vm["z1"])
        for i in range(n):
            kcols, kvals = _kernel_epigraph_terms(risk, vm, i)
            asm.ge([vm["iota1"][i], eta1] + list(kcols),
                   [1.0, 1.0] + [-v for v in kvals], 0.0)
    else:
        n_vars, vm, names = _sample_layout(m, n, ("alpha",), kfields)
        asm = _Assembler(n_vars, names)
        alpha = vm["alpha"][0]
        asm.c[alpha] = 1.0
        for i in range(n):
            kcols, kvals = _kernel_epigraph_terms(risk, vm, i)
            asm.c[list(kcols)] += risk.w0[i] * inv * np.asarray(kvals)
    _admissible(asm, model, vm["x"], sigma)
    _per_sample_structure(asm, model, risk, vm, loads, sigma, alpha)
    return ProblemInstance(asm.build(), vm,
                           _meta(model, risk, None, "cvar_min", sigma),
                           model=model, samples=samples)


def build_min_worstcase_mean(model: TrussModel, samples,
                             risk: RiskSpec) -> ProblemInstance:
    """Anchor program: minimize the worst-case mean with no CVaR budget.

    For tau > 0 this is the objective chain of the budgeted program alone;
    at tau = 0 it is plain weighted-mean compliance minimization. Evaluating
    the worst-case CVaR at its minimizer anchors the high end of a sweep.
    """
    loads = _sample_loads(model, samples, risk)
    n, m = risk.n, model.n_members
    sigma = _member_scale(model, loads)
    if risk.tau > 0.0:
        n_vars, vm, names = _sample_layout(
            m, n, ("lambda2", "eta2"), ("iota2", "y2", "z2"))
        asm = _Assembler(n_vars, names)
        lam2, eta2 = vm["lambda2"][0], vm["eta2"][0]
        asm.c[lam2] = risk.tau - 1.0
        asm.c[eta2] = 1.0
        asm.c[vm["z2"]] = risk.w0
        _phi_chain(asm, lam2, vm["iota2"], vm["y2"], vm["z2"])
        for i in range(n):
            asm.ge([vm["iota2"][i], eta2] + list(vm["b"][i]),
                   [1.0, 1.0] + [-2.0 * sigma] * m, 0.0)
    else:
        n_vars, vm, names = _sample_layout(m, n, (), ())
        asm = _Assembler(n_vars, names)
        for i in range(n):
            asm.c[vm["b"][i]] = 2.0 * sigma * risk.w0[i]
    _admissible(asm, model, vm["x"], sigma)
    _per_sample_structure(asm, model, risk, vm, loads, sigma, alpha=None)
    return ProblemInstance(asm.build(), vm,
                           _meta(model, risk, None, "mean_min", sigma),
                           model=model, samples=samples)


# ---------------------------------------------------------------------------
# solution extraction

def extract_design(instance: ProblemInstance, solution):
    """Read the design out of an optimal solution.

    Returns (design, alpha, worst_mean, worst_cvar) in joules. The design is
    clamped to the nonnegative orthant. worst_cvar is recomputed through the
    oracle layer from fresh compliance solves, never read off slack values;
    worst_mean is the solver objective for the mean-objective variants and
    an oracle recomputation otherwise.
    """
    if solution.status != "optimal":
        raise ValueError(f"cannot extract a design from status {solution.status!r}")
    sigma = instance.meta.get("member_scale", 1.0)
    x = np.maximum(np.asarray(solution.primal)[instance.var_map["x"]] / sigma, 0.0)
    design = Design(x=x)
    alpha = float(solution.primal[instance.var_map["alpha"][0]]) \
        if "alpha" in instance.var_map else float("nan")
    variant = instance.meta.get("variant")
    risk = instance.meta.get("risk")
    if risk is None:
        return design, alpha, float(solution.objective), float("nan")
    loads = expand_loads(instance.model, instance.samples.samples_kN,
                         instance.samples.loaded_dofs)
    comps = np.array([compliance(instance.model, design, xi) for xi in loads])
    worst_cv = worst_case_cvar(comps, risk)[0]
    if variant == "cvar_min":
        worst_mean = worst_case_expectation_primal(comps, risk.w0, risk.tau)[0]
    else:
        worst_mean = float(solution.objective)
    return design, alpha, float(worst_mean), float(worst_cv)
