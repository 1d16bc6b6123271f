"""Planar truss geometry, ground-structure generation, stiffness assembly,
and exact compliance evaluation by linear solve.

Internal units are strict SI: coordinates in m, areas in m^2, Young's modulus
in Pa, loads in N, compliance in J. Files at the boundary use the presentation
units (GPa, mm^2, mm^3, kN) and are converted on read/write.

Member j contributes (E x_j / l_j) beta_j beta_j^T to the stiffness matrix,
where beta_j holds the member's direction cosines at its free dofs (+e at the
second node, -e at the first; entries at fixed dofs are omitted). Compliance
of a load xi is sup_u {2 xi^T u - u^T K u} = xi^T K^+ xi when xi lies in the
range of K, and +inf otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class TrussModel:
    """Immutable truss: geometry, member incidence vectors, material, budget."""

    nodes: np.ndarray          # (N, 2) coordinates, m
    members: np.ndarray        # (M, 2) node index pairs
    fixed: np.ndarray          # (N, 2) bool, per-dof support mask
    beta: np.ndarray           # (M, d) incidence vectors on free dofs
    lengths: np.ndarray        # (M,) m
    young_modulus: float       # Pa
    volume_cap: float          # m^3
    free_dofs: tuple           # global dof ids (node*2 + axis), length d

    @property
    def n_members(self) -> int:
        return self.members.shape[0]

    @property
    def n_free_dofs(self) -> int:
        return len(self.free_dofs)

    def load_vector(self, node: int, load_N) -> np.ndarray:
        """Place a planar point load (N) at a node, mapped onto free dofs."""
        load_N = np.asarray(load_N, dtype=float)
        xi = np.zeros(self.n_free_dofs)
        for axis in range(2):
            gdof = 2 * node + axis
            if gdof in self._free_index:
                xi[self._free_index[gdof]] = load_N[axis]
            elif load_N[axis] != 0.0:
                raise ValueError(f"node {node} axis {axis} is fixed; cannot load it")
        return xi

    def loaded_dofs_for_node(self, node: int) -> tuple:
        """Free-dof indices receiving (fx, fy) at the given node."""
        out = []
        for axis in range(2):
            gdof = 2 * node + axis
            if gdof not in self._free_index:
                raise ValueError(f"node {node} axis {axis} is fixed; cannot load it")
            out.append(self._free_index[gdof])
        return tuple(out)

    @property
    def _free_index(self) -> dict:
        return {g: i for i, g in enumerate(self.free_dofs)}


@dataclass(frozen=True)
class Design:
    """Cross-sectional areas (m^2), one per member."""

    x: np.ndarray

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 1:
            raise ValueError("design must be a 1-d area vector")
        arr = np.array(x, copy=True)
        arr.flags.writeable = False
        object.__setattr__(self, "x", arr)


def member_volume(model: TrussModel, x: np.ndarray) -> float:
    return float(model.lengths @ np.asarray(x, dtype=float))


def in_admissible_set(model: TrussModel, x: np.ndarray, tol: float = 1e-8) -> bool:
    """x >= 0 and l^T x <= volume cap, within relative tolerance."""
    x = np.asarray(x, dtype=float)
    if np.any(x < -tol * max(1.0, float(np.abs(x).max(initial=0.0)))):
        return False
    return member_volume(model, x) <= model.volume_cap * (1.0 + tol)


def build_truss(nodes, members, fixed, young_modulus: float, volume_cap: float) -> TrussModel:
    """Generic constructor from node/member tables; computes beta and lengths.

    fixed is an (N, 2) boolean per-dof support mask. Members of zero length or
    with both ends fully fixed (empty incidence vector) are construction errors.
    """
    nodes = np.array(nodes, dtype=float)      # copies, so freezing below never
    members = np.array(members, dtype=int)    # touches caller-owned arrays
    fixed = np.array(fixed, dtype=bool)
    if nodes.ndim != 2 or nodes.shape[1] != 2:
        raise ValueError("nodes must be an (N, 2) coordinate table")
    if members.ndim != 2 or members.shape[1] != 2:
        raise ValueError("members must be an (M, 2) node index table")
    if fixed.shape != nodes.shape:
        raise ValueError("fixed mask must be (N, 2)")
    if not (young_modulus > 0 and volume_cap > 0):
        raise ValueError("Young's modulus and volume cap must be positive")
    n_nodes = nodes.shape[0]
    if members.size and (members.min() < 0 or members.max() >= n_nodes):
        raise ValueError("member node indices out of range")

    free_dofs = [2 * i + a for i in range(n_nodes) for a in range(2) if not fixed[i, a]]
    if len(free_dofs) < 1:
        raise ValueError("no free dofs")
    if 2 * n_nodes - len(free_dofs) < 2:
        raise ValueError("need at least 2 fixed dofs")
    free_index = {g: i for i, g in enumerate(free_dofs)}
    d = len(free_dofs)

    m = members.shape[0]
    beta = np.zeros((m, d))
    lengths = np.zeros(m)
    for j, (a, b) in enumerate(members):
        if a == b:
            raise ValueError(f"member {j} connects node {a} to itself")
        vec = nodes[b] - nodes[a]
        l = float(np.hypot(vec[0], vec[1]))
        if l <= 0.0:
            raise ValueError(f"member {j} has zero length")
        e = vec / l
        lengths[j] = l
        for axis in range(2):
            gb = 2 * b + axis
            ga = 2 * a + axis
            if gb in free_index:
                beta[j, free_index[gb]] += e[axis]
            if ga in free_index:
                beta[j, free_index[ga]] -= e[axis]
        if np.linalg.norm(beta[j]) <= 0.0:
            raise ValueError(f"member {j} has both ends fixed (empty incidence vector)")

    for arr in (nodes, members, fixed, beta, lengths):
        arr.flags.writeable = False
    return TrussModel(nodes, members, fixed, beta, lengths,
                      float(young_modulus), float(volume_cap), tuple(free_dofs))


def assemble_stiffness(model: TrussModel, design: Design) -> np.ndarray:
    """K(x) = sum_j (E x_j / l_j) beta_j beta_j^T, symmetric PSD (N/m)."""
    x = np.asarray(design.x, dtype=float)
    if x.shape != (model.n_members,):
        raise ValueError("design dimension must equal the member count")
    coef = model.young_modulus * x / model.lengths
    B = model.beta.T  # (d, m)
    K = (B * coef) @ model.beta
    return 0.5 * (K + K.T)


def compliance(model: TrussModel, design: Design, load_N: np.ndarray,
               range_tol: float = 1e-8) -> float:
    """Exact compliance xi^T K(x)^+ xi by symmetric eigenfactorization, or
    +inf when the load has a component outside range(K) beyond tolerance."""
    xi = np.asarray(load_N, dtype=float)
    if xi.shape != (model.n_free_dofs,):
        raise ValueError("load dimension must equal the number of free dofs")
    if not np.any(xi):
        return 0.0
    K = assemble_stiffness(model, design)
    w, V = np.linalg.eigh(K)
    cutoff = 1e-12 * max(w.max(initial=0.0), 0.0)
    keep = w > cutoff
    if not np.any(keep):
        return math.inf
    coeffs = V.T @ xi
    u = V[:, keep] @ (coeffs[keep] / w[keep])
    if np.linalg.norm(K @ u - xi) > range_tol * np.linalg.norm(xi):
        return math.inf
    return float(xi @ u)


def expand_loads(model: TrussModel, samples_kN: np.ndarray,
                 loaded_dofs=None) -> np.ndarray:
    """Expand (n, k) kN sample rows into (n, d) free-dof load vectors in N.

    When loaded_dofs is None the columns must already cover every free dof.
    """
    arr = np.atleast_2d(np.asarray(samples_kN, dtype=float)) * 1e3
    d = model.n_free_dofs
    if loaded_dofs is None:
        if arr.shape[1] != d:
            raise ValueError("samples without loaded_dofs must span all free dofs")
        return arr
    dofs = list(loaded_dofs)
    if arr.shape[1] != len(dofs):
        raise ValueError("sample width must match the number of loaded dofs")
    out = np.zeros((arr.shape[0], d))
    out[:, dofs] = arr
    return out


def build_grid_ground_structure(nx: int, ny: int, spacing: float, fixed_nodes,
                                connectivity_level: int, young_modulus: float,
                                volume_cap: float) -> TrussModel:
    """Regular nx-by-ny grid ground structure.

    Node (ix, iy) has id ix*ny + iy and coordinates (ix*spacing, iy*spacing).
    Members connect node pairs with Chebyshev index distance <= the
    connectivity level; pairs whose segment passes through an intermediate
    grid node (gcd of the index offsets > 1) are excluded, as are pairs with
    both endpoints fully fixed. Structures with rigid-body modes at the
    uniform feasible design are rejected with a diagnostic.
    """
    if nx < 1 or ny < 1 or nx * ny < 2:
        raise ValueError("grid needs at least two nodes")
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    if connectivity_level < 1:
        raise ValueError("connectivity level must be at least 1")
    fixed_set = {int(i) for i in fixed_nodes}
    n_nodes = nx * ny
    if any(i < 0 or i >= n_nodes for i in fixed_set):
        raise ValueError("fixed node id out of range")

    nodes = np.array([[ix * spacing, iy * spacing] for ix in range(nx) for iy in range(ny)])
    fixed = np.zeros((n_nodes, 2), dtype=bool)
    for i in fixed_set:
        fixed[i, :] = True

    members = []
    for ix in range(nx):
        for iy in range(ny):
            a = ix * ny + iy
            for dx in range(0, connectivity_level + 1):
                dys = range(1, connectivity_level + 1) if dx == 0 else range(-connectivity_level, connectivity_level + 1)
                for dy in dys:
                    jx, jy = ix + dx, iy + dy
                    if not (0 <= jx < nx and 0 <= jy < ny):
                        continue
                    if math.gcd(abs(dx), abs(dy)) != 1:
                        continue
                    b = jx * ny + jy
                    if a in fixed_set and b in fixed_set:
                        continue
                    members.append((a, b))
    if not members:
        raise ValueError("grid produced no members")

    model = build_truss(nodes, np.array(members), fixed, young_modulus, volume_cap)

    # reject structures that cannot carry generic loads even with every member present
    x_uniform = np.full(model.n_members, volume_cap / float(model.lengths.sum()))
    K = assemble_stiffness(model, Design(x_uniform))
    w = np.linalg.eigvalsh(K)
    if w.min() <= 1e-10 * max(w.max(), 0.0) or w.max() <= 0.0:
        raise ValueError(
            "ground structure has rigid-body modes at the uniform design "
            f"(min/max stiffness eigenvalues {w.min():.3e}/{w.max():.3e}); "
            "add supports or raise the connectivity level")
    return model


def build_single_bar(young_modulus: float, volume_cap: float, length: float = 1.0) -> TrussModel:
    """One horizontal member from a fixed wall node to a free node."""
    nodes = [[0.0, 0.0], [length, 0.0]]
    fixed = [[True, True], [False, False]]
    return build_truss(nodes, [[0, 1]], fixed, young_modulus, volume_cap)


def build_two_bar(young_modulus: float, volume_cap: float,
                  span: float = 1.0, drop: float = 1.0) -> TrussModel:
    """One free node carried by a horizontal member (length = span) and a
    diagonal member from a lower fixed node; the diagonal resists vertical
    load components."""
    nodes = [[0.0, 0.0], [0.0, -drop], [span, 0.0]]
    fixed = [[True, True], [True, True], [False, False]]
    return build_truss(nodes, [[0, 2], [1, 2]], fixed, young_modulus, volume_cap)


# ---------------------------------------------------------------------------
# File formats (presentation units at the boundary)
# ---------------------------------------------------------------------------

def save_truss(path, model: TrussModel) -> None:
    """Sectioned CSV: [nodes] id,x_m,y_m,fixed_x,fixed_y; [members]
    id,node_a,node_b; [scalars] E_GPa and Vbar_mm3."""
    lines = ["[nodes]", "id,x_m,y_m,fixed_x,fixed_y"]
    for i, (xy, fx) in enumerate(zip(model.nodes, model.fixed)):
        lines.append(f"{i},{xy[0]:.17g},{xy[1]:.17g},{int(fx[0])},{int(fx[1])}")
    lines.append("[members]")
    lines.append("id,node_a,node_b")
    for j, (a, b) in enumerate(model.members):
        lines.append(f"{j},{a},{b}")
    lines.append("[scalars]")
    lines.append(f"E_GPa,{model.young_modulus / 1e9:.17g}")
    lines.append(f"Vbar_mm3,{model.volume_cap * 1e9:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_truss(path) -> TrussModel:
    text = Path(path).read_text().splitlines()
    section = None
    nodes, fixed, members = [], [], []
    scalars = {}
    for raw in text:
        line = raw.strip()
        if not line:
            continue
        if line.startswith("["):
            section = line
            continue
        if section == "[nodes]":
            if line.startswith("id,"):
                continue
            _i, x, y, fx, fy = line.split(",")
            nodes.append((float(x), float(y)))
            fixed.append((bool(int(fx)), bool(int(fy))))
        elif section == "[members]":
            if line.startswith("id,"):
                continue
            _i, a, b = line.split(",")
            members.append((int(a), int(b)))
        elif section == "[scalars]":
            key, value = line.split(",")
            scalars[key] = float(value)
        else:
            raise ValueError(f"unexpected content outside sections: {line!r}")
    if "E_GPa" not in scalars or "Vbar_mm3" not in scalars:
        raise ValueError("truss file must provide E_GPa and Vbar_mm3 scalars")
    return build_truss(np.array(nodes), np.array(members, dtype=int), np.array(fixed, dtype=bool),
                       scalars["E_GPa"] * 1e9, scalars["Vbar_mm3"] * 1e-9)


def save_design_csv(path, design: Design) -> None:
    """member_id,area_mm2 rows (areas converted from m^2)."""
    lines = ["member_id,area_mm2"]
    for j, area in enumerate(design.x):
        lines.append(f"{j},{area * 1e6:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_design_csv(path) -> Design:
    text = Path(path).read_text().strip().splitlines()
    if not text or text[0].strip() != "member_id,area_mm2":
        raise ValueError("design CSV must start with header 'member_id,area_mm2'")
    areas = []
    for line in text[1:]:
        if not line.strip():
            continue
        _j, a = line.split(",")
        areas.append(float(a) * 1e-6)
    return Design(np.array(areas))
