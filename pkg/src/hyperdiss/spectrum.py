"""Eigenvalues of the Fourier symbol and uniform dissipativity type.

``lambda(i xi)`` are the roots of ``det(lambda A0 + i|xi| A(omega) + L) = 0``,
i.e. the eigenvalues of the generator ``G(xi)``.  The spectral abscissa
swept over ``|xi|`` is fitted on log-log axes at low and high frequency to
read off the type ``(p, q)`` in ``Re lambda <= -c |xi|^2p / (1+|xi|^2)^q``.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .conditions import SphereSampling, _sampling
from .system import KERNEL_TOL, Frequency, generator, generator_batch

log = logging.getLogger(__name__)

__all__ = [
    "InvarianceError",
    "SpectrumSweep",
    "DissipativityType",
    "eigenvalues_at",
    "constraint_bases",
    "restrict_generators",
    "sweep",
    "classify",
    "default_s_grid",
]

INVARIANCE_TOL = 1e-8


class InvarianceError(RuntimeError):
    pass


def default_s_grid(s_min=1e-3, s_max=1e3, points=48):
    if points < 48:
        raise ValueError(f"need at least 48 grid points, got {points}")
    if not (1e-4 <= s_min < s_max <= 1e4):
        raise ValueError(f"grid [{s_min}, {s_max}] must lie inside [1e-4, 1e4]")
    return np.geomspace(s_min, s_max, points)


def constraint_bases(cb, s, omegas, tol=KERNEL_TOL):
    """Orthonormal bases of ``N(xi) = Ker(i s Q(omega) + R)`` on a grid.

    Returns an array ``(len(s), len(omegas), m, d)``; the kernel dimension
    ``d`` must be the same at every sample.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    W = np.asarray(omegas, dtype=float).reshape(-1, cb.n)
    Qw = np.einsum("kj,jab->kab", W, np.stack(cb.Q))
    M = cb.R[None, None].astype(complex) + 1j * s[:, None, None, None] * Qw[None]
    _, sv, Vh = np.linalg.svd(M, full_matrices=True)
    smax = sv[..., :1]
    rank = np.where(smax[..., 0] > 0, np.sum(sv > tol * smax, axis=-1), 0)
    r = int(rank.flat[0])
    if np.any(rank != r):
        raise InvarianceError("constraint rank varies across the grid; sweep s = 0 separately")
    return np.conj(np.swapaxes(Vh[..., r:, :], -1, -2))


def restrict_generators(G, B):
    """Project generators onto constraint bases and check invariance.

    Returns ``B^H G B``; raises when ``|(I - B B^H) G B|`` exceeds
    ``1e-8 * max(1, |G|)`` anywhere.
    """
    GB = G @ B
    Gr = np.conj(np.swapaxes(B, -1, -2)) @ GB
    leak = np.linalg.norm(GB - B @ Gr, axis=(-2, -1))
    scale = np.maximum(1.0, np.linalg.norm(G, axis=(-2, -1)))
    worst = float(np.max(leak / scale)) if leak.size else 0.0
    if worst > INVARIANCE_TOL:
        raise InvarianceError(
            f"constraint subspace not invariant: check condition (C) (residual {worst:.2e})")
    return Gr


def eigenvalues_at(sys, xi, cb=None, tol=KERNEL_TOL):
    """Eigenvalues at a single frequency, optionally on the constraint subspace."""
    f = xi if isinstance(xi, Frequency) else Frequency(xi)
    G = generator(sys, f)
    if cb is None:
        return np.linalg.eigvals(G)
    omega = f.omega if f.s > 0 else np.eye(sys.n)[0]
    B = constraint_bases(cb, [f.s], [omega], tol)[0, 0]
    return np.linalg.eigvals(restrict_generators(G, B))


@dataclass
class SpectrumSweep:
    s_grid: np.ndarray
    omega_set: SphereSampling
    abscissa: np.ndarray      # (len(s_grid), count) max Re lambda
    restricted: bool = False
    abscissa_zero: float = None

    @property
    def envelope(self):
        """``max_omega`` abscissa per ``s``."""
        return self.abscissa.max(axis=1)

    def to_rows(self):
        for i, s in enumerate(self.s_grid):
            for k, w in enumerate(self.omega_set.points):
                yield (float(s), k, *map(float, w), float(self.abscissa[i, k]))


def sweep(sys, s_grid, sph=None, cb=None, chunk=8192):
    """Spectral abscissa on the grid ``s_grid x sph``.

    ``s = 0`` is never part of the grid; its abscissa is stored separately.
    """
    sph = _sampling(sys, sph)
    s_grid = np.asarray(s_grid, dtype=float)
    if np.any(s_grid <= 0) or np.any(np.diff(s_grid) <= 0):
        raise ValueError("s_grid must be positive and strictly increasing")
    out = np.empty((s_grid.size, sph.count))
    rows = max(1, chunk // sph.count)
    for lo in range(0, s_grid.size, rows):
        hi = min(s_grid.size, lo + rows)
        G = generator_batch(sys, s_grid[lo:hi], sph.points)
        if cb is not None:
            G = restrict_generators(G, constraint_bases(cb, s_grid[lo:hi], sph.points))
        out[lo:hi] = np.linalg.eigvals(G).real.max(axis=-1)
    ez = eigenvalues_at(sys, np.zeros(sys.n), cb)
    return SpectrumSweep(s_grid, sph, out, cb is not None, float(ez.real.max()))


@dataclass
class DissipativityType:
    p: int
    q: int
    c: float
    classified: bool = True
    fit_diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "p": self.p, "q": self.q, "c": self.c, "classified": self.classified,
            "fit_diagnostics": self.fit_diagnostics,
        }


def _slope_fit(s, y):
    """LS slope of ``log y`` vs ``log s`` and the max deviation of per-decade slopes."""
    x, ly = np.log10(s), np.log10(y)
    slope = float(np.polyfit(x, ly, 1)[0])
    dev = 0.0
    for d0 in np.arange(np.floor(x.min() + 1e-9), np.ceil(x.max() - 1e-9)):
        sel = (x >= d0 - 1e-9) & (x <= d0 + 1 + 1e-9)
        if np.count_nonzero(sel) >= 3:
            dev = max(dev, abs(float(np.polyfit(x[sel], ly[sel], 1)[0]) - slope))
    return slope, dev


def classify(sw, low=(1e-3, 1e-1), high=(1e1, 1e3), resid_tol=0.15, int_tol=0.2):
    """Read ``(p, q)`` off the low- and high-frequency slopes of ``-abscissa``."""
    s = np.asarray(sw.s_grid)
    if s.min() > low[0] * (1 + 1e-9) or s.max() < high[1] * (1 - 1e-9):
        raise ValueError(f"sweep must span [{low[0]}, {high[1]}]")
    env = sw.envelope
    diag = {"restricted": bool(sw.restricted)}

    def window(lo, hi):
        sel = (s >= lo * (1 - 1e-9)) & (s <= hi * (1 + 1e-9))
        return s[sel], -env[sel]

    sl, yl = window(*low)
    sh, yh = window(*high)
    if np.any(yl <= 0) or np.any(yh <= 0):
        diag["reason"] = "nonnegative spectral abscissa in a fit window"
        return DissipativityType(None, None, 0.0, False, diag)
    low_slope, low_dev = _slope_fit(sl, yl)
    high_slope, high_dev = _slope_fit(sh, yh)
    p = int(round(low_slope / 2))
    r = int(round(-high_slope / 2))
    diag.update(low_slope=low_slope, low_residual=low_dev,
                high_slope=high_slope, high_residual=high_dev)
    problems = []
    if low_dev >= resid_tol or high_dev >= resid_tol:
        problems.append("slope residual too large")
    if p < 1 or abs(low_slope - 2 * p) > int_tol:
        problems.append("low-frequency slope is not a positive even integer")
    if r < 0 or abs(high_slope + 2 * r) > int_tol:
        problems.append("high-frequency slope is not a nonpositive even integer")
    if problems:
        diag["reason"] = "; ".join(problems)
        return DissipativityType(None, None, 0.0, False, diag)
    q = p + r
    ratio = (-env) * (1 + s * s) ** q / s ** (2 * p)
    c = float(ratio.min())
    if p != 1:
        diag["note"] = "p != 1: outside the reference examples"
    if not np.all(env <= -c * s ** (2 * p) / (1 + s * s) ** q + 1e-12):
        diag["reason"] = "certified constant fails recheck"
        return DissipativityType(p, q, c, False, diag)
    return DissipativityType(p, q, c, c > 0, diag)
