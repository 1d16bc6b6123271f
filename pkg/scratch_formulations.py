import numpy as np
import math, time
from drotruss.kernels import Kernel, RiskSpec, uniform_weights, upsilon, phi_star
from drotruss.truss import build_single_bar, build_two_bar, Design, compliance, expand_loads
from drotruss.sampling import LoadSampleSet
from drotruss.ipm import solve
from drotruss.conic import validate
from drotruss.formulations import (
    build_upsilon_program_uniform, build_upsilon_program_triangular,
    build_phi_star_program, build_compliance_min, build_dro_mean_cvar,
    build_dro_mean_cvar_tau0, build_min_worstcase_cvar, build_min_worstcase_mean,
    extract_design)
from drotruss.oracles import worst_case_cvar, worst_case_expectation_primal

rng = np.random.default_rng(7)

# ---- Prop-4 block: min z == phi_star(y)
worst = 0.0
for _ in range(200):
    y = rng.uniform(-6, 6)
    inst = build_phi_star_program(y)
    sol = solve(inst.program)
    assert sol.status == "optimal", (y, sol.status)
    worst = max(worst, abs(sol.objective - phi_star(y)))
print(f"phi-star block: worst abs err {worst:.2e}")
assert worst < 1e-7

# ---- Prop-5 block: uniform upsilon
for h in (0.5, 10.0):
    worst = 0.0
    k = Kernel("uniform", h)
    for _ in range(300):
        c = rng.uniform(-3 * h, 3 * h)
        inst = build_upsilon_program_uniform(c, h)
        sol = solve(inst.program)
        assert sol.status == "optimal", (c, sol.status)
        worst = max(worst, abs(sol.objective - upsilon(k, c)))
    print(f"uniform upsilon block h={h}: worst abs err {worst:.2e}")
    assert worst < 1e-6 * max(1, h)
inst = build_upsilon_program_uniform(0.0, 10.0)
sol = solve(inst.program)
print(f"uniform c=0 h=10: {sol.objective:.9f} (ref 2.5)")
assert abs(sol.objective - 2.5) < 1e-7

# ---- Prop-6 block: triangular upsilon
for h in (0.5, 10.0):
    worst = 0.0
    k = Kernel("triangular", h)
    for _ in range(300):
        c = rng.uniform(-3 * h, 3 * h)
        inst = build_upsilon_program_triangular(c, h)
        sol = solve(inst.program)
        assert sol.status == "optimal", (c, sol.status)
        worst = max(worst, abs(sol.objective - upsilon(k, c)))
    print(f"triangular upsilon block h={h}: worst abs err {worst:.2e}")
    assert worst < 1e-6 * max(1, h)

# ---- compliance_min on the single bar: analytic optimum
E, V = 20e9, 1e-4  # 100 mm^2 * 1 m
bar = build_single_bar(young_modulus=E, volume_cap=V, length=1.0)
xi = bar.load_vector(1, [100e3, 0.0]) if bar.n_free_dofs == 2 else None
print("single bar free dofs:", bar.n_free_dofs)
xi = np.atleast_1d([100e3]) if bar.n_free_dofs == 1 else xi
inst = build_compliance_min(bar, xi)
sol = solve(inst.program)
print("compliance_min status", sol.status, "objective", sol.objective)
ref = (100e3) ** 2 * 1.0 / (E * V / 1.0)
print(f"analytic {ref:.6f}")
assert abs(sol.objective - ref) < 1e-6 * ref
d, a, wm, wc = extract_design(inst, sol)
pc = compliance(bar, d, xi)
print(f"extract: x={d.x}, compliance at x* = {pc:.6f}")
assert abs(sol.objective - pc) < 1e-6 * ref

# ---- compliance_min on two-bar
tb = build_two_bar(young_modulus=210e9, volume_cap=1e-3)
xi = tb.load_vector(2, [30e3, -50e3])
inst = build_compliance_min(tb, xi)
iss = validate(inst.program)
assert not iss, iss
sol = solve(inst.program)
d, a, wm, wc = extract_design(inst, sol)
pc = compliance(tb, d, xi)
print(f"two-bar compliance_min: {sol.status}, obj {sol.objective:.6f}, "
      f"compliance(x*) {pc:.6f}, iters {sol.iterations}")
assert sol.status == "optimal" and abs(sol.objective - pc) <= 1e-6 * (1 + abs(pc))
assert tb.lengths @ d.x >= tb.volume_cap * (1 - 1e-6)
print("ALL BLOCK CHECKS PASSED")
