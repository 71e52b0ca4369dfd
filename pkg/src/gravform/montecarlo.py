"""Monte Carlo estimation of the form factor and the tidal tensor for arbitrary shapes.

Sample pairs (r, r') are drawn uniformly from A x B in fixed-size chunks. Each
chunk has its own generator keyed by (seed, chunk index), and chunk statistics
are merged in chunk order, so estimates are reproducible and independent of
the number of worker threads.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import DomainError, GeometryPair, sample_uniform

CHUNK_SIZE = 1 << 16
MIN_DISTANCE = 1e-12
# tensor component order: xx, yy, zz, xy, xz, yz
_COMPONENTS = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))


@dataclass(frozen=True)
class EstimateWithError:
    value: float
    std_error: float
    samples: int
    signed_value: float = math.nan
    redraws: int = 0

    def __post_init__(self):
        if self.samples < 2:
            raise ValueError("an estimate needs at least 2 samples")
        if not (math.isfinite(self.std_error) and self.std_error >= 0):
            raise ValueError(f"invalid standard error {self.std_error!r}")


@dataclass(frozen=True)
class TidalTensor:
    """Symmetric 3x3 tidal tensor with per-entry standard errors.

    ``n @ matrix @ n`` is the signed form-factor integrand in direction n.
    """

    matrix: np.ndarray
    std_errors: np.ndarray
    samples: int
    redraws: int = 0

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))

    @property
    def trace_std_error(self) -> float:
        # upper bound; diagonal entries are correlated
        return float(np.sum(np.diag(self.std_errors)))

    def signed(self, n: Sequence[float]) -> float:
        n = np.asarray(n, float)
        return float(n @ self.matrix @ n)

    @classmethod
    def from_components(cls, comps: Sequence[float], errs: Sequence[float],
                        samples: int, redraws: int = 0) -> "TidalTensor":
        m = np.zeros((3, 3))
        e = np.zeros((3, 3))
        for (a, b), c, s in zip(_COMPONENTS, comps, errs):
            m[a, b] = m[b, a] = c
            e[a, b] = e[b, a] = s
        return cls(m, e, samples, redraws)


def tidal_kernel(delta: Sequence[float], n: Sequence[float]) -> float:
    """(3 (n.delta)^2 - |delta|^2) / |delta|^5 for a single separation vector."""
    d = np.asarray(delta, float)
    r2 = float(d @ d)
    if r2 < MIN_DISTANCE**2:
        raise DomainError("tidal kernel undefined for coincident points")
    nd = float(np.asarray(n, float) @ d)
    return (3.0 * nd * nd - r2) / r2**2.5


def _chunk_sizes(samples: int) -> list[int]:
    full, rest = divmod(samples, CHUNK_SIZE)
    return [CHUNK_SIZE] * full + ([rest] if rest else [])


def _chunk_rng(seed: int, index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) % 2**64, spawn_key=(index,))
    return np.random.default_rng(ss)


def _separations(pair: GeometryPair, seed: int, index: int, size: int) -> tuple[np.ndarray, int]:
    rng = _chunk_rng(seed, index)
    s = sample_uniform(pair.A, rng, size) - sample_uniform(pair.B, rng, size)
    redraws = 0
    bad = np.einsum("ij,ij->i", s, s) < MIN_DISTANCE**2
    while bad.any():
        k = int(bad.sum())
        redraws += k
        s[bad] = sample_uniform(pair.A, rng, k) - sample_uniform(pair.B, rng, k)
        bad = np.einsum("ij,ij->i", s, s) < MIN_DISTANCE**2
    return s, redraws


def _tensor_values(s: np.ndarray) -> np.ndarray:
    r2 = np.einsum("ij,ij->i", s, s)
    inv5 = r2**-2.5
    cols = []
    for a, b in _COMPONENTS:
        v = 3.0 * s[:, a] * s[:, b]
        if a == b:
            v = v - r2
        cols.append(v * inv5)
    return np.column_stack(cols)


def _chunk_stats(values: np.ndarray) -> tuple[int, np.ndarray, np.ndarray]:
    n = values.shape[0]
    mean = values.mean(axis=0)
    m2 = ((values - mean) ** 2).sum(axis=0)
    return n, mean, m2


def _merge(stats) -> tuple[int, np.ndarray, np.ndarray]:
    # Chan et al. pairwise update, applied in chunk order
    n, mean, m2 = 0, None, None
    for nb, mb, m2b in stats:
        if n == 0:
            n, mean, m2 = nb, mb.copy(), m2b.copy()
            continue
        tot = n + nb
        delta = mb - mean
        mean = mean + delta * (nb / tot)
        m2 = m2 + m2b + delta * delta * (n * nb / tot)
        n = tot
    return n, mean, m2


def _run(pair: GeometryPair, samples: int, seed: int, workers: int, reduce_fn):
    if samples < 2:
        raise ValueError("samples must be at least 2")
    sizes = _chunk_sizes(int(samples))

    def work(index: int):
        s, redraws = _separations(pair, seed, index, sizes[index])
        return _chunk_stats(reduce_fn(s)), redraws

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, range(len(sizes))))
    else:
        results = [work(i) for i in range(len(sizes))]
    n, mean, m2 = _merge(r[0] for r in results)
    return n, mean, m2, sum(r[1] for r in results)


def mc_lambda(pair: GeometryPair, samples: int, seed: int = 0, workers: int = 1) -> EstimateWithError:
    """Plain Monte Carlo estimate of the form factor along ``pair.direction``."""
    n_vec = pair.n

    def kernel(s):
        r2 = np.einsum("ij,ij->i", s, s)
        nd = s @ n_vec
        return ((3.0 * nd * nd - r2) * r2**-2.5)[:, None]

    n, mean, m2, redraws = _run(pair, samples, seed, workers, kernel)
    V = pair.volume
    signed = V * float(mean[0])
    std = V * math.sqrt(float(m2[0]) / (n - 1)) / math.sqrt(n)
    return EstimateWithError(abs(signed), std, n, signed, redraws)


def mc_tensor(pair: GeometryPair, samples: int, seed: int = 0, workers: int = 1) -> TidalTensor:
    """Monte Carlo estimate of the full tidal tensor from the same sample stream as mc_lambda."""
    n, mean, m2, redraws = _run(pair, samples, seed, workers, _tensor_values)
    V = pair.volume
    comps = V * mean
    errs = V * np.sqrt(m2 / (n - 1)) / math.sqrt(n)
    return TidalTensor.from_components(comps, errs, n, redraws)


def principal_direction(t: TidalTensor | np.ndarray) -> tuple[np.ndarray, float]:
    """Direction maximizing |n^T T n| and the maximum (the spectral radius).

    A zero tensor returns e_z. The eigenvector sign is fixed so that its
    largest-magnitude component is positive.
    """
    m = t.matrix if isinstance(t, TidalTensor) else np.asarray(t, float)
    m = 0.5 * (m + m.T)
    if not np.all(np.isfinite(m)):
        raise DomainError("tensor has non-finite entries")
    w, v = np.linalg.eigh(m)
    k = int(np.argmax(np.abs(w)))
    lam = float(abs(w[k]))
    if lam == 0.0:
        return np.array([0.0, 0.0, 1.0]), 0.0
    vec = v[:, k]
    if vec[np.argmax(np.abs(vec))] < 0:
        vec = -vec
    return vec / np.linalg.norm(vec), lam
