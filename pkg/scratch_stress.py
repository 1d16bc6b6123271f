"""Randomized agreement stress test vs cvxopt conelp (dev-only sanity)."""
import numpy as np
import scipy.sparse as sp
from cvxopt import matrix, solvers

from drotruss.conic import Cone, ConeProgram, NONNEG, SOC
from drotruss.ipm import SolverSettings, solve

solvers.options["show_progress"] = False
rng = np.random.default_rng(42)

n_fail, n_disagree, n_opt, n_skip = 0, 0, 0, 0
worst = 0.0
for trial in range(300):
    n = int(rng.integers(2, 25))
    p = int(rng.integers(0, min(n, 4)))
    cones = []
    rows = 0
    while rows < n + 1:
        if rng.random() < 0.5:
            d = int(rng.integers(1, 5))
            cones.append(Cone(NONNEG, d))
        else:
            d = int(rng.integers(2, 6))
            cones.append(Cone(SOC, d))
        rows += d
    m = sum(cn.dim for cn in cones)
    G = sp.csc_matrix(rng.normal(size=(m, n)))
    A = sp.csc_matrix(rng.normal(size=(p, n)))
    # build around a strictly feasible primal-dual pair so most instances
    # are solvable
    x0 = rng.normal(size=n)
    s0 = np.zeros(m)
    z0 = np.zeros(m)
    ofs = 0
    for cn in cones:
        d = cn.dim
        if cn.kind == NONNEG:
            s0[ofs:ofs + d] = rng.uniform(0.5, 2.0, d)
            z0[ofs:ofs + d] = rng.uniform(0.5, 2.0, d)
        else:
            v = rng.normal(size=d); v[0] = np.linalg.norm(v[1:]) + rng.uniform(0.5, 2.0)
            s0[ofs:ofs + d] = v
            v = rng.normal(size=d); v[0] = np.linalg.norm(v[1:]) + rng.uniform(0.5, 2.0)
            z0[ofs:ofs + d] = v
        ofs += d
    h = G @ x0 + s0
    b = A @ x0
    y0 = rng.normal(size=p)
    c = -(A.T @ y0 + G.T @ z0)

    prog = ConeProgram(c=c, A=A, b=b, G=G, h=h, cones=tuple(cones))
    sol = solve(prog)

    dims = {"l": 0, "q": [], "s": []}
    idx_l = [cn.dim for cn in cones if cn.kind == NONNEG]
    # conelp wants the nonneg rows first; permute
    perm = []
    ofs = 0
    soc_dims = []
    for cn in cones:
        if cn.kind == NONNEG:
            perm.extend(range(ofs, ofs + cn.dim))
        ofs += cn.dim
    nl = len(perm)
    ofs = 0
    for cn in cones:
        if cn.kind == SOC:
            perm.extend(range(ofs, ofs + cn.dim))
            soc_dims.append(cn.dim)
        ofs += cn.dim
    perm = np.array(perm)
    dims = {"l": nl, "q": soc_dims, "s": []}
    Gc = matrix(np.asarray(G.todense())[perm])
    hc = matrix(h[perm])
    try:
        ref = solvers.conelp(matrix(c), Gc, hc, dims, matrix(np.asarray(A.todense())), matrix(b))
    except Exception:
        n_skip += 1
        continue
    if ref["status"] != "optimal":
        n_skip += 1
        continue
    ref_obj = float((matrix(c).T * ref["x"])[0])
    if sol.status != "optimal":
        n_fail += 1
        print(f"trial {trial}: mine={sol.status} ref optimal {ref_obj:.6g} "
              f"(n={n} p={p} m={m})")
        continue
    n_opt += 1
    rel = abs(sol.objective - ref_obj) / max(1.0, abs(ref_obj))
    worst = max(worst, rel)
    if rel > 1e-5:
        n_disagree += 1
        print(f"trial {trial}: obj mine={sol.objective:.9g} ref={ref_obj:.9g} rel={rel:.2e}")

print(f"optimal-agree={n_opt} fail={n_fail} disagree={n_disagree} skip={n_skip} worst_rel={worst:.2e}")
