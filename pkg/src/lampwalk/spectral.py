"""Exact return probabilities, Green functions, spectral radii and Perron pairs.

The dynamic programmes push the full n-step distribution forward over the
states reachable so far; nothing is truncated by a radius, so every
probability they report is exact up to floating-point rounding. Mass is
renormalised after each step and the scale kept in log form, which keeps
tiny return probabilities (1e-100 and below) representable.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .errors import ConvergenceError, IrreducibilityError, MemoryGuardError, ParameterError
from .kernels import TransitionKernel

MAX_STATES = 10_000_000


def _advance(k: TransitionKernel, dist: dict, key: Callable | None) -> dict:
    """One step of the forward equation. With ``key`` the distribution is
    indexed by lumping class and stores ``(representative, mass)``."""
    if key is None:
        nxt = defaultdict(float)
        for x, p in dist.items():
            for y, q in k.transitions(x):
                nxt[y] += p * float(q)
        return nxt
    nxt = {}
    for rep, p in dist.values():
        for y, q in k.transitions(rep):
            c = key(y)
            if c in nxt:
                r, m = nxt[c]
                nxt[c] = (r, m + p * float(q))
            else:
                nxt[c] = (y, p * float(q))
    return nxt


def log_transition_probabilities(k: TransitionKernel, x, y, n_max: int, lump: bool = True,
                                 max_states: int = MAX_STATES) -> np.ndarray:
    """``log p^(n)(x, y)`` for ``n = 0..n_max`` (``-inf`` where zero).

    Lumping by ``k.lumper(x)`` is used only when ``y == x``, where the
    target class is the singleton ``{x}``.
    """
    key = k.lumper(x) if (lump and y == x) else None
    if key is None:
        dist = {x: 1.0}
        target = y
    else:
        target = key(x)
        dist = {target: (x, 1.0)}
    out = np.full(n_max + 1, -np.inf)
    log_scale = 0.0
    for n in range(n_max + 1):
        if n:
            dist = _advance(k, dist, key)
            if len(dist) > max_states:
                raise MemoryGuardError(
                    f"reachable set has {len(dist)} states at step {n} (limit {max_states})")
            total = sum(dist.values()) if key is None else sum(m for _, m in dist.values())
            if total <= 0:
                break
            log_scale += math.log(total)
            if key is None:
                dist = {s: p / total for s, p in dist.items() if p > 0}
            else:
                dist = {c: (r, m / total) for c, (r, m) in dist.items() if m > 0}
        mass = dist.get(target, 0.0) if key is None else dist.get(target, (None, 0.0))[1]
        if mass > 0:
            out[n] = log_scale + math.log(mass)
    return out


def return_probabilities(k: TransitionKernel, x, n_max: int, lump: bool = True) -> np.ndarray:
    """Exact ``p^(n)(x, x)`` for ``n = 0..n_max``."""
    return np.exp(log_transition_probabilities(k, x, x, n_max, lump))


def truncated_green(k: TransitionKernel, x, y, z: float, N: int) -> float:
    """Partial sum ``sum_{n <= N} p^(n)(x, y) z^n``."""
    if z < 0 or N < 0:
        raise ParameterError(f"need z >= 0 and N >= 0, got z={z}, N={N}")
    if z == 0:
        return 1.0 if x == y else 0.0
    logs = log_transition_probabilities(k, x, y, N)
    n = np.arange(N + 1)
    terms = np.where(np.isfinite(logs), np.exp(logs + n * math.log(z)), 0.0)
    return float(terms.sum())


@dataclass
class SpectralEstimate:
    rho: float
    period: int
    times: np.ndarray          # times with positive return probability
    roots: np.ndarray          # p^(t)(x,x)^(1/t) at those times
    slopes: np.ndarray = field(repr=False, default=None)  # log-ratio sequence

    def rows(self) -> list[tuple[int, float]]:
        return list(zip(self.times.tolist(), self.roots.tolist()))


def richardson_log_ratio(times: np.ndarray, logp: np.ndarray, points: int = 3) -> tuple[float, np.ndarray]:
    """Extrapolate ``log rho`` from log-probabilities on an arithmetic grid.

    Uses the one-step log-ratios ``L(t) = (log p(t) - log p(t - s)) / s``,
    which behave like ``log rho + b/t + c/t^2`` when ``p(t) ~ C t^a rho^t``,
    and fits that form exactly through ``points`` ratios spread over the
    second half of the grid.
    """
    s = times[1] - times[0]
    slopes = np.diff(logp) / s
    t = times[1:].astype(float)
    if len(slopes) < points:
        return float(slopes[-1]), slopes
    half = len(slopes) // 2
    idx = np.unique(np.linspace(half, len(slopes) - 1, points).round().astype(int))
    basis = np.vander(1.0 / t[idx], len(idx), increasing=True)
    coef = np.linalg.solve(basis, slopes[idx])
    return float(coef[0]), slopes


def spectral_radius_dp(k: TransitionKernel, x=None, n_max: int = 400, lump: bool = True,
                       points: int = 3) -> SpectralEstimate:
    """Estimate ``rho(P) = limsup p^(n)(x,x)^(1/n)`` from exact return
    probabilities, evaluated along multiples of the period."""
    if n_max < 10 or n_max % 2:
        raise ParameterError(f"n_max must be even and >= 10, got {n_max}")
    x = k.origin_state if x is None else x
    return rho_from_log_sequence(log_transition_probabilities(k, x, x, n_max, lump), points)


def rho_from_log_sequence(logp: np.ndarray, points: int = 3) -> SpectralEstimate:
    """Spectral-radius estimate from ``log p^(n)`` for ``n = 0..n_max``."""
    n_max = len(logp) - 1
    pos = np.flatnonzero(np.isfinite(logp[1:])) + 1
    if len(pos) == 0:
        raise ConvergenceError(f"no positive probability within {n_max} steps")
    period = int(np.gcd.reduce(pos))
    times = np.arange(period, n_max + 1, period)
    lp = logp[times]
    if not np.isfinite(lp).all():
        # aperiodic tail not yet reached: keep the last stretch of positive times
        last_bad = np.flatnonzero(~np.isfinite(lp))[-1]
        times, lp = times[last_bad + 1:], lp[last_bad + 1:]
    roots = np.exp(lp / times)
    if len(times) < 2:
        return SpectralEstimate(float(roots[-1]), period, times, roots, np.array([]))
    log_rho, slopes = richardson_log_ratio(times, lp, points)
    return SpectralEstimate(math.exp(log_rho), period, times, roots, slopes)


@dataclass
class PerronPair:
    rho: float
    h: np.ndarray
    iterations: int = 0
    damped: bool = False

    def residual(self, A) -> float:
        return float(np.abs(A @ self.h - self.rho * self.h).max())


def _as_matrix(A):
    if sparse.issparse(A):
        return sparse.csr_matrix(A, dtype=float)
    return np.asarray(A, dtype=float)


def is_irreducible(A) -> bool:
    A = _as_matrix(A)
    if A.shape[0] == 1:
        return True
    graph = sparse.csr_matrix(A > 0) if not sparse.issparse(A) else (A > 0)
    n, _ = connected_components(graph, directed=True, connection="strong")
    return n == 1


def _power(A, tol: float, max_iter: int):
    """Normalised power iteration stopped by the Collatz-Wielandt bounds."""
    v = np.ones(A.shape[0]) / A.shape[0]
    prev = math.inf
    for it in range(1, max_iter + 1):
        w = A @ v
        if (w <= 0).any() or (v <= 0).any():
            v = w / w.sum() if w.sum() > 0 else v
            continue
        ratios = w / v
        lo, hi = ratios.min(), ratios.max()
        est = w.sum() / v.sum()
        v = w / w.sum()
        if hi - lo <= tol * hi or (abs(est - prev) <= tol * est and hi - lo <= 1e3 * tol * hi):
            return est, v, it
        prev = est
    return None, v, max_iter


def perron(A, tol: float = 1e-13, max_iter: int = 100_000) -> PerronPair:
    """Perron root and positive eigenvector of an irreducible nonnegative matrix.

    Raw power iteration first; periodic matrices never settle, in which
    case the iteration is repeated on ``(I + A / |A|_inf) / 2`` and the
    root recovered affinely.
    """
    A = _as_matrix(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ParameterError(f"perron needs a square matrix, got shape {A.shape}")
    data = A.data if sparse.issparse(A) else A
    if (data < 0).any() or not np.isfinite(data).all():
        raise ParameterError("perron needs a finite nonnegative matrix")
    n = A.shape[0]
    if n == 1:
        return PerronPair(float(A[0, 0]), np.ones(1))
    if not is_irreducible(A):
        raise IrreducibilityError("matrix is reducible")
    rho, v, it = _power(A, tol, min(max_iter, 1_000))
    damped = False
    if rho is None:
        norm = float(abs(A).sum(axis=1).max())
        B = (sparse.identity(n, format="csr") + A / norm) / 2 if sparse.issparse(A) \
            else (np.eye(n) + A / norm) / 2
        mu, v, it2 = _power(B, tol, max_iter)
        if mu is None:
            raise ConvergenceError(f"power iteration did not converge in {max_iter} steps")
        rho, it, damped = (2 * mu - 1) * norm, it + it2, True
    h = v / v.sum()
    # one Rayleigh-type refinement removes the affine rounding of the damped root
    rho = float((A @ h).sum() / h.sum())
    return PerronPair(rho, h, it, damped)


def h_transform(P, h, rho: float):
    """``p^h(x, y) = p(x, y) h(y) / (rho h(x))`` for matrices.

    Kernels are wrapped lazily; ``h`` is then a callable on states.
    """
    if rho <= 0:
        raise ParameterError(f"rho must be positive, got {rho}")
    if isinstance(P, TransitionKernel):
        return HTransformedKernel(P, h, rho)
    h = np.asarray(h, dtype=float)
    if (h <= 0).any():
        raise ParameterError("h must be strictly positive")
    if sparse.issparse(P):
        D = sparse.diags(1.0 / (rho * h))
        return D @ sparse.csr_matrix(P) @ sparse.diags(h)
    P = np.asarray(P, dtype=float)
    return P * h[None, :] / (rho * h[:, None])


@dataclass(frozen=True)
class HTransformedKernel(TransitionKernel):
    kernel: TransitionKernel
    h: Callable
    rho: float

    @property
    def graph(self):
        return self.kernel.graph

    @property
    def space(self):
        return self.kernel.space

    def transitions(self, x):
        hx = self.h(x)
        if hx <= 0:
            raise ParameterError(f"h({x!r}) = {hx} is not positive")
        out = []
        for y, p in self.kernel.transitions(x):
            hy = self.h(y)
            if hy <= 0:
                raise ParameterError(f"h({y!r}) = {hy} is not positive")
            out.append((y, float(p) * hy / (self.rho * hx)))
        return out

    def spec(self):
        return {"kind": "h_transform", "rho": self.rho, "kernel": self.kernel.spec()}
