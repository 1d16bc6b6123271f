"""Solver smoke tests (scratch, not part of the package)."""
import numpy as np
import scipy.sparse as sp

from drotruss.conic import Cone, ConeProgram, NONNEG, SOC
from drotruss.ipm import SolverSettings, solve

ok = True

def check(name, got, want, tol=1e-7):
    global ok
    err = abs(got - want)
    flag = "PASS" if err <= tol else "FAIL"
    if flag == "FAIL":
        ok = False
    print(f"{flag} {name}: got {got!r} want {want!r} err {err:.2e}")

# 1) min t  s.t. t >= ||(3,4)||  -> 5
# vars: t. G: -t + s0 = 0 row... cone (t, 3, 4) in SOC:
# Gx + s = h, s in K: s = h - Gx = (t, 3, 4) -> G = [[-1],[0],[0]], h = (0,3,4)
c = np.array([1.0])
G = sp.csc_matrix(np.array([[-1.0], [0.0], [0.0]]))
h = np.array([0.0, 3.0, 4.0])
prog = ConeProgram(c=c, A=sp.csc_matrix((0, 1)), b=np.zeros(0), G=G, h=h,
                   cones=(Cone(SOC, 3),))
sol = solve(prog)
print("status:", sol.status, "iters:", sol.iterations)
check("soc-norm", sol.objective, 5.0)

# 2) min x s.t. x >= 0 -> 0
c = np.array([1.0])
G = sp.csc_matrix(np.array([[-1.0]]))
h = np.array([0.0])
prog = ConeProgram(c=c, A=sp.csc_matrix((0, 1)), b=np.zeros(0), G=G, h=h,
                   cones=(Cone(NONNEG, 1),))
sol = solve(prog)
print("status:", sol.status, "iters:", sol.iterations)
check("lp-min", sol.objective, 0.0, 1e-8)

# 3) equality: min x1+x2 s.t. x1+x2... use x1 - x2 = 1, x >= 0 -> min x1+x2 = 1
c = np.array([1.0, 1.0])
A = sp.csc_matrix(np.array([[1.0, -1.0]]))
b = np.array([1.0])
G = sp.csc_matrix(-np.eye(2))
h = np.zeros(2)
prog = ConeProgram(c=c, A=A, b=b, G=G, h=h, cones=(Cone(NONNEG, 2),))
sol = solve(prog)
print("status:", sol.status, "iters:", sol.iterations)
check("lp-eq", sol.objective, 1.0)
check("lp-eq-x1", sol.primal[0], 1.0)

# 4) rotated-cone style: min s s.t. 4 s h >= cq^2 with cq = 10, h = 10 -> s = 2.5
#    cone (s + h, s - h, cq), vars: s. h fixed 10, cq fixed 10.
#    rows: (s+10, s-10, 10) in SOC
c = np.array([1.0])
G = sp.csc_matrix(np.array([[-1.0], [-1.0], [0.0]]))
h = np.array([10.0, -10.0, 10.0])
prog = ConeProgram(c=c, A=sp.csc_matrix((0, 1)), b=np.zeros(0), G=G, h=h,
                   cones=(Cone(SOC, 3),))
sol = solve(prog)
print("status:", sol.status, "iters:", sol.iterations)
check("rotated", sol.objective, 2.5)

# 5) primal infeasible: x >= 1, x <= 0
c = np.array([0.0])
G = sp.csc_matrix(np.array([[-1.0], [1.0]]))
h = np.array([-1.0, 0.0])
prog = ConeProgram(c=c, A=sp.csc_matrix((0, 1)), b=np.zeros(0), G=G, h=h,
                   cones=(Cone(NONNEG, 2),))
sol = solve(prog)
print("status:", sol.status, "iters:", sol.iterations)
if sol.status != "primal_infeasible":
    ok = False
    print("FAIL infeasible detection")
else:
    print("PASS infeasible detection")

# 6) dual infeasible (unbounded): min -x, x >= 0
c = np.array([-1.0])
G = sp.csc_matrix(np.array([[-1.0]]))
h = np.array([0.0])
prog = ConeProgram(c=c, A=sp.csc_matrix((0, 1)), b=np.zeros(0), G=G, h=h,
                   cones=(Cone(NONNEG, 1),))
sol = solve(prog)
print("status:", sol.status, "iters:", sol.iterations)
if sol.status != "dual_infeasible":
    ok = False
    print("FAIL unbounded detection")
else:
    print("PASS unbounded detection")

# 7) a random feasible SOCP with equalities, compare objective to a dense
#    brute check via scipy (just sanity: strong duality gap small)
rng = np.random.default_rng(7)
n, p = 6, 2
c = rng.normal(size=n)
A = sp.csc_matrix(rng.normal(size=(p, n)))
x_feas = rng.normal(size=n)
b = A @ x_feas
# cones: nonneg(2) + soc(4); build h so x_feas strictly interior
Gd = rng.normal(size=(6, n))
s_int = np.array([1.0, 2.0, 5.0, 1.0, 0.5, 0.2])
h = Gd @ x_feas + s_int
prog = ConeProgram(c=c, A=A, b=b, G=sp.csc_matrix(Gd), h=h,
                   cones=(Cone(NONNEG, 2), Cone(SOC, 4)))
sol = solve(prog)
print("status:", sol.status, "iters:", sol.iterations,
      "pres:", sol.primal_residual, "dres:", sol.dual_residual, "gap:", sol.gap)
if sol.status == "optimal" and sol.gap < 1e-8:
    print("PASS random socp")
else:
    ok = False
    print("FAIL random socp")

# warm start self-test
sol2 = solve(prog, warm_start=sol)
print("warm status:", sol2.status, "iters:", sol2.iterations)
check("warm-obj", sol2.objective, sol.objective, 1e-6)

print("ALL OK" if ok else "FAILURES PRESENT")
