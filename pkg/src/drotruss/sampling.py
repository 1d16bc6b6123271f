"""Seeded generation and persistence of load samples.

Loads are planar point loads in kN (conversion to newtons happens when a
formulation consumes the samples). Draws come from a counter-based Philox
bit stream: uniforms take the top 53 bits of each 64-bit word, normal
deviates are produced by Box-Muller, and covariance factors come from
Cholesky with a symmetric-eigenvalue fallback for semidefinite matrices.
The same per-component draw helper is used by both generators, so a mixture
with a single component reproduces sample_gaussian bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

_INV_2_53 = 2.0 ** -53


@dataclass(frozen=True)
class GaussianComponent:
    """One Gaussian load component: mean (kN) and covariance (kN^2)."""

    mean_kN: np.ndarray
    cov_kN2: np.ndarray

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean_kN, dtype=float)
        cov = np.asarray(self.cov_kN2, dtype=float)
        if mean.ndim != 1 or mean.size < 1 or not np.all(np.isfinite(mean)):
            raise ValueError("mean must be a finite 1-d vector")
        if cov.shape != (mean.size, mean.size) or not np.all(np.isfinite(cov)):
            raise ValueError("covariance must be a finite square matrix matching the mean")
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(cov).max()))):
            raise ValueError("covariance must be symmetric")
        eigvals = np.linalg.eigvalsh(cov)
        if eigvals.min() < -1e-10 * max(float(np.trace(cov)), 0.0):
            raise ValueError(f"covariance is not positive semidefinite: min eigenvalue {eigvals.min()}")
        object.__setattr__(self, "mean_kN", _frozen(mean))
        object.__setattr__(self, "cov_kN2", _frozen(cov))

    @property
    def dim(self) -> int:
        return self.mean_kN.size


@dataclass(frozen=True)
class MixtureSpec:
    """Gaussian mixture with fixed per-component sample counts."""

    components: tuple
    counts: tuple

    def __post_init__(self) -> None:
        components = tuple(self.components)
        counts = tuple(int(c) for c in self.counts)
        if len(components) == 0:
            raise ValueError("mixture needs at least one component")
        if len(counts) != len(components):
            raise ValueError("counts must match components")
        if any(c < 0 for c in counts):
            raise ValueError("counts must be nonnegative")
        if sum(counts) < 1:
            raise ValueError("total sample count must be at least 1")
        dims = {comp.dim for comp in components}
        if len(dims) != 1:
            raise ValueError("all components must share the same dimension")
        object.__setattr__(self, "components", components)
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class LoadSampleSet:
    """n load vectors (kN) with component labels and generation metadata.

    loaded_dofs, when set, are the indices of the model's free displacement
    dofs that receive these load components (bound by the experiment layer).
    """

    samples_kN: np.ndarray
    component: np.ndarray
    seed: int | None = None
    loaded_dofs: tuple | None = None

    def __post_init__(self) -> None:
        samples = np.atleast_2d(np.asarray(self.samples_kN, dtype=float))
        labels = np.asarray(self.component, dtype=int)
        if samples.shape[0] < 1:
            raise ValueError("need at least one sample")
        if labels.shape != (samples.shape[0],):
            raise ValueError("component labels must be one per sample")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        object.__setattr__(self, "samples_kN", _frozen(samples))
        object.__setattr__(self, "component", _frozen(labels))
        if self.loaded_dofs is not None:
            object.__setattr__(self, "loaded_dofs", tuple(int(i) for i in self.loaded_dofs))

    @property
    def n(self) -> int:
        return self.samples_kN.shape[0]

    @property
    def dim(self) -> int:
        return self.samples_kN.shape[1]

    def samples_newton(self) -> np.ndarray:
        """Samples converted from kN to N."""
        return self.samples_kN * 1e3

    def with_loaded_dofs(self, loaded_dofs) -> "LoadSampleSet":
        return LoadSampleSet(self.samples_kN, self.component, self.seed, tuple(loaded_dofs))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


def _standard_normals(bitgen, count: int) -> np.ndarray:
    """count Box-Muller deviates from a Philox raw-word stream."""
    pairs = (count + 1) // 2
    if pairs == 0:
        return np.empty(0)
    raw = bitgen.random_raw(2 * pairs)
    u = (raw >> np.uint64(11)).astype(float) * _INV_2_53
    u1 = u[0::2]
    u2 = u[1::2]
    r = np.sqrt(-2.0 * np.log1p(-u1))  # 1-u1 in (0,1], so the log is finite
    theta = 2.0 * np.pi * u2
    z = np.empty(2 * pairs)
    z[0::2] = r * np.cos(theta)
    z[1::2] = r * np.sin(theta)
    return z[:count]


def covariance_factor(cov: np.ndarray) -> np.ndarray:
    """L with L @ L.T = cov: Cholesky when positive definite, else a symmetric
    eigenvalue factor with small negative eigenvalues clamped to zero."""
    cov = np.asarray(cov, dtype=float)
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(cov)
        if w.min() < -1e-10 * max(float(np.trace(cov)), 0.0):
            raise ValueError(f"covariance is not positive semidefinite: min eigenvalue {w.min()}")
        w = np.clip(w, 0.0, None)
        return V * np.sqrt(w)


def _draw_component(bitgen, component: GaussianComponent, n: int) -> np.ndarray:
    d = component.dim
    z = _standard_normals(bitgen, n * d).reshape(n, d)
    L = covariance_factor(component.cov_kN2)
    return component.mean_kN + z @ L.T


def sample_gaussian(component: GaussianComponent, n: int, seed: int) -> LoadSampleSet:
    """n i.i.d. draws from one Gaussian component; deterministic given seed."""
    if n < 1:
        raise ValueError("n must be at least 1")
    bitgen = np.random.Philox(seed)
    samples = _draw_component(bitgen, component, n)
    return LoadSampleSet(samples, np.zeros(n, dtype=int), seed=seed)


def sample_mixture(spec: MixtureSpec, seed: int) -> LoadSampleSet:
    """Concatenated per-component draws from one sequential stream, with
    component labels retained; deterministic given seed."""
    bitgen = np.random.Philox(seed)
    blocks = []
    labels = []
    for idx, (component, count) in enumerate(zip(spec.components, spec.counts)):
        if count == 0:
            continue
        blocks.append(_draw_component(bitgen, component, count))
        labels.append(np.full(count, idx, dtype=int))
    return LoadSampleSet(np.vstack(blocks), np.concatenate(labels), seed=seed)


SAMPLE_CSV_HEADER = "fx_kN,fy_kN,component"


def save_samples_csv(path, samples: LoadSampleSet) -> None:
    """Write planar samples as CSV (17 significant digits, exact round-trip)."""
    if samples.dim != 2:
        raise ValueError("the sample CSV format stores planar (fx, fy) loads")
    lines = [SAMPLE_CSV_HEADER]
    for (fx, fy), comp in zip(samples.samples_kN, samples.component):
        lines.append(f"{fx:.17g},{fy:.17g},{int(comp)}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_samples_csv(path, seed: int | None = None) -> LoadSampleSet:
    text = Path(path).read_text().strip().splitlines()
    if not text or text[0].strip() != SAMPLE_CSV_HEADER:
        raise ValueError(f"sample CSV must start with header '{SAMPLE_CSV_HEADER}'")
    rows = []
    labels = []
    for line in text[1:]:
        if not line.strip():
            continue
        fx, fy, comp = line.split(",")
        rows.append((float(fx), float(fy)))
        labels.append(int(comp))
    if not rows:
        raise ValueError("sample CSV has no data rows")
    return LoadSampleSet(np.array(rows), np.array(labels, dtype=int), seed=seed)
