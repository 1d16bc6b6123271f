import numpy as np
import math
from drotruss.kernels import Kernel, RiskSpec, phi_divergence, uniform_weights, upsilon
from drotruss.oracles import (worst_case_expectation_primal, worst_case_expectation_dual,
                              worst_case_cvar, empirical_cvar)

rng = np.random.default_rng(0)

# 1. tau = 0 exactness
f = rng.normal(size=6); w0 = rng.dirichlet(np.ones(6))
v, w = worst_case_expectation_primal(f, w0, 0.0)
assert v == float(f @ w0) and np.array_equal(w, w0), "tau0"
print("tau0 exact ok")

# 2. n=2 pinned example
v, w = worst_case_expectation_primal([0.0, 1.0], [0.5, 0.5], 0.5)
ref = (1 + math.sqrt(0.5)) / 2
print(f"n2: {v:.9f} ref {ref:.9f} diff {abs(v-ref):.2e}")
assert abs(v - ref) < 1e-9

# 3. tau >= n-1 uniform -> max f
for n in (2, 3, 5, 8):
    f = rng.normal(size=n)
    v, w = worst_case_expectation_primal(f, uniform_weights(n), n - 1.0)
    assert abs(v - f.max()) < 1e-9, (n, v, f.max())
print("vertex case ok")

# 4. primal vs dual, 100 random
worst = 0.0
for t in range(100):
    n = rng.integers(2, 9)
    f = rng.normal(size=n) * rng.uniform(0.1, 10)
    w0 = rng.dirichlet(np.ones(n) * rng.uniform(0.3, 3))
    tau = rng.uniform(1e-3, 0.9)
    vp, w = worst_case_expectation_primal(f, w0, tau)
    vd = worst_case_expectation_dual(f, w0, tau)
    rel = abs(vp - vd) / (1 + abs(vp))
    worst = max(worst, rel)
    div = phi_divergence(w, w0)
    assert div <= tau + 1e-8, (t, div, tau)
    assert abs(w.sum() - 1) < 1e-9 and w.min() >= -1e-12
print(f"primal/dual 100 random: worst rel {worst:.2e}")
assert worst < 1e-6

# 5. constant payoff
assert worst_case_expectation_dual([3.0, 3.0, 3.0], uniform_weights(3), 0.4) == 3.0
v, w = worst_case_expectation_primal([3.0, 3.0, 3.0], uniform_weights(3), 0.4)
assert v == 3.0
print("constant ok")

# 6. dual nondecreasing in tau
f = rng.normal(size=5); w0 = rng.dirichlet(np.ones(5))
vals = [worst_case_expectation_dual(f, w0, t) for t in (0.05, 0.1, 0.3, 0.6, 0.9, 2.0, 10.0)]
assert all(vals[i] <= vals[i+1] + 1e-9 for i in range(len(vals)-1)), vals
assert vals[-1] <= f.max() + 1e-6
print("monotone in tau ok", [f"{v:.4f}" for v in vals], "max", f"{f.max():.4f}")

# 7. n=1 uniform h=10 gamma=0.95 f=0 -> 9.5
risk = RiskSpec(kernel=Kernel("uniform", 10.0), gamma=0.95, tau=0.0, w0=np.array([1.0]))
v, a = worst_case_cvar([0.0], risk)
print(f"single-sample cvar: {v:.9f} (alpha* {a:.6f}) ref 9.5")
assert abs(v - 9.5) < 1e-6

# 8. tau=0 gamma=0 -> smoothed mean -> plain mean for symmetric kernels
f = rng.normal(size=9)
for kind in ("uniform", "triangular"):
    risk = RiskSpec(kernel=Kernel(kind, 0.37), gamma=0.0, tau=0.0, w0=uniform_weights(9))
    v, a = worst_case_cvar(f, risk)
    # gamma=0 CVaR of the KDE is its mean = sample mean (kernels have zero mean)
    assert abs(v - f.mean()) < 1e-6, (kind, v, f.mean())
print("gamma=0 mean ok")

# 9. h->0, tau=0 -> empirical discrete CVaR
f = rng.normal(size=12); w0 = rng.dirichlet(np.ones(12)); gamma = 0.8
h = 1e-3 * np.ptp(f)
risk = RiskSpec(kernel=Kernel("uniform", h), gamma=gamma, tau=0.0, w0=w0)
v, a = worst_case_cvar(f, risk)
e = empirical_cvar(f, w0, gamma)
print(f"h->0: smoothed {v:.6f} empirical {e:.6f} diff {abs(v-e):.2e}")
assert abs(v - e) < 5e-4 * (1 + abs(e))

# 10. worst cvar >= worst mean
for t in range(20):
    n = rng.integers(2, 10)
    f = rng.normal(size=n) * 3
    w0 = rng.dirichlet(np.ones(n))
    tau = rng.uniform(0, 0.5)
    risk = RiskSpec(kernel=Kernel("triangular", 0.5), gamma=0.6, tau=tau, w0=w0)
    vc, _ = worst_case_cvar(f, risk)
    vm, _ = worst_case_expectation_primal(f, w0, tau)
    assert vc >= vm - 1e-8, (t, vc, vm)
print("cvar >= mean ok")
print("ALL ORACLE CHECKS PASSED")
