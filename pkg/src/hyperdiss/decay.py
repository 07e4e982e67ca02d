"""Fourier-mode propagation, Lyapunov certificates and decay measurements.

The energy functional of the Fourier-space energy method is represented by
a Hermitian matrix ``E(xi)``:

    E = A0 + w1(s) * S A0 + sign2 * w2(s) * i K(omega) A0

with weights ``w1 = a1/(1+s^2)``, ``w2 = a1 a2 alpha s/(1+s^2)^2`` for the
regularity-loss envelope ``eta`` and ``w1 = a1``, ``w2 = a1 a2 alpha s/(1+s^2)``
for the standard envelope ``rho``.  Along ``u' = G u`` one has
``dE/dt = -u^H D u`` with ``D = -(E G + G^H E)``; the certificate is
``D - 2 c env(s) E >= 0`` on the sampled frequencies.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .conditions import _sampling, compensator_matrix, find_alpha
from .spectrum import constraint_bases, restrict_generators
from .system import Frequency, eta_envelope, generator, generator_batch, rho_envelope

log = logging.getLogger(__name__)

__all__ = [
    "LyapunovParams",
    "LyapunovError",
    "CertificationError",
    "DecayFit",
    "Profile",
    "propagate_mode",
    "lyapunov_matrix",
    "certify_decay",
    "tune_lyapunov",
    "tune_and_certify",
    "pointwise_check",
    "constraint_drift",
    "l2_decay_fit",
    "decay_norms",
    "ENVELOPES",
]

ENVELOPES = {"eta": eta_envelope, "rho": rho_envelope}
ALPHA_GRID = 2.0 ** -np.arange(1, 21)


class LyapunovError(ValueError):
    pass


class CertificationError(RuntimeError):
    pass


def _envelope(name):
    try:
        return ENVELOPES[name]
    except KeyError:
        raise ValueError(f"envelope must be 'eta' or 'rho', got {name!r}") from None


# --------------------------------------------------------------------------
# propagation


def propagate_mode(sys, xi, u0hat, t):
    """``exp(t G(xi)) u0hat`` by scaling and squaring."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    u0 = np.asarray(u0hat, dtype=complex)
    if t == 0:
        return u0.copy()
    return sla.expm(t * generator(sys, xi)) @ u0


def _expm_batch(M):
    M = np.asarray(M)
    if M.ndim == 2:
        return sla.expm(M)
    flat = M.reshape(-1, *M.shape[-2:])
    return sla.expm(flat).reshape(M.shape)


# --------------------------------------------------------------------------
# Lyapunov functional


@dataclass(frozen=True)
class LyapunovParams:
    alpha: float
    alpha1: float
    alpha2: float
    sign2: int = 1
    envelope: str = "eta"

    def __post_init__(self):
        if self.sign2 not in (1, -1):
            raise ValueError("sign2 must be +1 or -1")
        _envelope(self.envelope)
        if min(self.alpha, self.alpha1, self.alpha2) < 0:
            raise ValueError("alpha, alpha1, alpha2 must be nonnegative")

    def weights(self, s):
        s = np.asarray(s, dtype=float)
        d = 1.0 + s * s
        prod = self.alpha1 * self.alpha2 * self.alpha * s
        if self.envelope == "eta":
            return self.alpha1 / d, self.sign2 * prod / d ** 2
        return np.full_like(s, self.alpha1), self.sign2 * prod / d

    def to_dict(self):
        return {"alpha": self.alpha, "alpha1": self.alpha1, "alpha2": self.alpha2,
                "sign2": self.sign2, "envelope": self.envelope}


def lyapunov_matrix(sys, S, K, xi, p):
    """Hermitian matrix of the energy functional at ``xi``."""
    f = xi if isinstance(xi, Frequency) else Frequency(xi)
    S = np.zeros((sys.m, sys.m)) if S is None else np.asarray(S, dtype=float)
    w1, w2 = p.weights(f.s)
    E = sys.A0 + w1 * (S @ sys.A0)
    if f.s > 0 and w2 != 0:
        E = E + w2 * 1j * (compensator_matrix(K, sys, f.omega) @ sys.A0)
    E = 0.5 * (E + np.conj(E.T))
    if np.linalg.eigvalsh(E)[0] <= 0:
        raise LyapunovError("alpha1/alpha2 too large: energy matrix is not positive definite")
    return E


class _LyapunovGrid:
    """Precomputed pieces of ``E`` and ``D`` on ``s_grid x sph``."""

    def __init__(self, sys, S, K, s_grid, sph, cb=None):
        self.s = np.asarray(s_grid, dtype=float)
        W = sph.points
        m = sys.m
        S = np.zeros((m, m)) if S is None else np.asarray(S, dtype=float)
        G = generator_batch(sys, self.s, W)
        E0 = np.broadcast_to(sys.A0.astype(complex), G.shape)
        E1 = np.broadcast_to((S @ sys.A0).astype(complex), G.shape)
        KA0 = np.stack([compensator_matrix(K, sys, w) @ sys.A0 for w in W])
        E2 = np.broadcast_to(1j * KA0[None], G.shape)
        if cb is not None:
            B = constraint_bases(cb, self.s, W)
            Bh = np.conj(np.swapaxes(B, -1, -2))
            G = restrict_generators(G, B)
            E0, E1, E2 = (Bh @ X @ B for X in (E0, E1, E2))
        self.G = G
        self.E = [E0, E1, E2]
        self.D = [-(X @ G + np.conj(np.swapaxes(G, -1, -2)) @ X) for X in self.E]

    def assemble(self, p):
        w1, w2 = p.weights(self.s)
        w1 = w1[:, None, None, None]
        w2 = w2[:, None, None, None]
        E = self.E[0] + w1 * self.E[1] + w2 * self.E[2]
        D = self.D[0] + w1 * self.D[1] + w2 * self.D[2]
        herm = lambda X: 0.5 * (X + np.conj(np.swapaxes(X, -1, -2)))  # noqa: E731
        return herm(E), herm(D)

    def rates(self, p):
        """Per-sample largest ``c`` with ``D - 2 c env E >= 0``, and E's eigen-range.

        Returns ``(rates, c0, C0)``; ``rates`` is None if ``E`` is not
        positive definite somewhere.
        """
        E, D = self.assemble(p)
        lamE = np.linalg.eigvalsh(E)
        c0, C0 = float(lamE[..., 0].min()), float(lamE[..., -1].max())
        if c0 <= 0:
            return None, c0, C0
        Lc = np.linalg.cholesky(E)
        X = np.linalg.solve(Lc, D)
        X = np.linalg.solve(Lc, np.conj(np.swapaxes(X, -1, -2)))
        gen = np.linalg.eigvalsh(0.5 * (X + np.conj(np.swapaxes(X, -1, -2))))[..., 0]
        env = ENVELOPES[p.envelope](self.s)[:, None]
        return gen / (2.0 * env), c0, C0


@dataclass
class Certificate:
    params: LyapunovParams
    c: float
    margin: float
    c0: float
    C0: float
    worst: tuple = None

    @property
    def C(self):
        return math.sqrt(self.C0 / self.c0)

    @property
    def certified(self):
        return self.margin >= 0

    def to_dict(self):
        return {"params": self.params.to_dict(), "c": self.c, "margin": self.margin,
                "c0": self.c0, "C0": self.C0, "C": self.C, "certified": self.certified,
                "worst": None if self.worst is None else list(self.worst)}


def certify_decay(sys, S, K, p, c, s_grid, sph=None, cb=None, _grid=None):
    """Check ``lambda_min(D - 2 c env E) >= 0`` on the grid.

    ``margin`` is the smallest such eigenvalue (normalised by ``E``); a
    nonnegative margin certifies ``|u(t)| <= C exp(-c env t) |u0|`` on the
    sampled frequencies with ``C = sqrt(C0/c0)``.
    """
    sph = _sampling(sys, sph)
    g = _grid or _LyapunovGrid(sys, S, K, s_grid, sph, cb)
    E, D = g.assemble(p)
    lamE = np.linalg.eigvalsh(E)
    c0, C0 = float(lamE[..., 0].min()), float(lamE[..., -1].max())
    if c0 <= 0:
        raise LyapunovError("alpha1/alpha2 too large: energy matrix is not positive definite")
    env = ENVELOPES[p.envelope](g.s)[:, None, None, None]
    lam = np.linalg.eigvalsh(D - 2.0 * c * env * E)[..., 0]
    i, k = np.unravel_index(int(np.argmin(lam)), lam.shape)
    worst = (float(g.s[i]), [float(x) for x in sph.points[k]])
    return Certificate(p, float(c), float(lam[i, k]), c0, C0, worst)


def _best_rate(grid, p):
    rates, c0, _ = grid.rates(p)
    if rates is None:
        return -np.inf
    return float(rates.min())


def tune_lyapunov(sys, S, K, envelope, s_grid, sph=None, cb=None, alpha=None, rounds=6):
    """Coordinate search over ``alpha1, alpha2`` in ``{2^-1..2^-20}`` and ``sign2``.

    Maximises the certified rate ``c``; returns ``(LyapunovParams, c)``.
    ``alpha`` defaults to :func:`find_alpha`'s best-margin value.
    """
    _envelope(envelope)
    sph = _sampling(sys, sph)
    if alpha is None:
        res = find_alpha(sys, S, K, sph, cb=cb)
        if res is None:
            raise CertificationError("no admissible alpha: compensator conditions fail")
        alpha = res.alpha
    grid = _LyapunovGrid(sys, S, K, s_grid, sph, cb)

    def rate(sign2, j1, j2):
        return _best_rate(grid, LyapunovParams(alpha, ALPHA_GRID[j1], ALPHA_GRID[j2], sign2, envelope))

    best = (-np.inf, None)
    for sign2 in (1, -1):
        i1 = i2 = 3
        cur = rate(sign2, i1, i2)
        for _ in range(rounds):
            changed = False
            vals = [rate(sign2, j, i2) for j in range(ALPHA_GRID.size)]
            j = int(np.argmax(vals))
            if vals[j] > cur:
                i1, cur, changed = j, vals[j], True
            vals = [rate(sign2, i1, j) for j in range(ALPHA_GRID.size)]
            j = int(np.argmax(vals))
            if vals[j] > cur:
                i2, cur, changed = j, vals[j], True
            if not changed:
                break
        p = LyapunovParams(alpha, float(ALPHA_GRID[i1]), float(ALPHA_GRID[i2]), sign2, envelope)
        log.info("tune_lyapunov: sign2=%+d best c=%.4g at a1=%g a2=%g", sign2, cur, p.alpha1, p.alpha2)
        if cur > best[0]:
            best = (cur, p)
    c, p = best
    if not c > 0:
        rates, _, _ = grid.rates(p) if p is not None else (None, 0, 0)
        where = ""
        if rates is not None:
            i, k = np.unravel_index(int(np.argmin(rates)), rates.shape)
            where = f"; worst at s={grid.s[i]:.3g}, omega={sph.points[k]}"
        raise CertificationError(f"no parameters certify c > 0 (best c = {c:.3g}){where}")
    return p, c


def tune_and_certify(sys, S, K, envelope, s_grid, sph=None, cb=None, tune_sph=None,
                     safety=0.999):
    """Tune on ``tune_sph`` (default ``sph``), then certify on ``sph``.

    The rate is re-derived on the full sampling with the tuned parameters
    and backed off by ``safety`` before the final check, so a coarse
    tuning sphere costs rate but never soundness.
    """
    sph = _sampling(sys, sph)
    p, _ = tune_lyapunov(sys, S, K, envelope, s_grid, tune_sph or sph, cb)
    grid = _LyapunovGrid(sys, S, K, s_grid, sph, cb)
    c = safety * _best_rate(grid, p)
    if not c > 0:
        raise CertificationError(f"tuned parameters do not certify on the full sampling (c = {c:.3g})")
    return certify_decay(sys, S, K, p, c, s_grid, sph, cb, _grid=grid)


# --------------------------------------------------------------------------
# pointwise bound on the propagator


@dataclass
class PointwiseFit:
    C: float
    c: float
    succeeded: bool
    violations: list = field(default_factory=list)
    norms: np.ndarray = None

    def to_dict(self):
        return {"C": self.C, "c": self.c, "succeeded": self.succeeded,
                "violations": [list(v) for v in self.violations[:100]],
                "violation_count": len(self.violations)}


def propagator_norms(sys, s_grid, sph, t_grid, cb=None):
    """``|exp(t G(s, omega))|_2`` on the grid, shape ``(S, W, T)``."""
    s = np.asarray(s_grid, dtype=float)
    t = np.asarray(t_grid, dtype=float)
    G = generator_batch(sys, s, sph.points)
    if cb is not None:
        G = restrict_generators(G, constraint_bases(cb, s, sph.points))
    out = np.empty((s.size, sph.count, t.size))
    for j, tj in enumerate(t):
        if tj == 0:
            out[..., j] = 1.0
            continue
        P = _expm_batch(tj * G)
        out[..., j] = np.linalg.norm(P, ord=2, axis=(-2, -1))
    return out


def pointwise_check(sys, s_grid, sph, envelope, t_grid, cb=None, C_max=100.0, c_min=1e-4,
                    norms=None):
    """Fit ``|exp(t G)| <= C exp(-c env(s) t)`` over all samples.

    Picks the largest ``c`` whose smallest admissible ``C`` stays below
    ``C_max``.  When even ``c_min`` needs ``C > C_max`` the fit fails and
    the offending ``(s, omega_index, t)`` samples are listed.
    """
    env_f = _envelope(envelope)
    sph = _sampling(sys, sph)
    s = np.asarray(s_grid, dtype=float)
    t = np.asarray(t_grid, dtype=float)
    if norms is None:
        norms = propagator_norms(sys, s, sph, t, cb)
    logn = np.log(np.maximum(norms, 1e-300))
    et = env_f(s)[:, None, None] * t[None, None, :]

    def logC(c):
        return float(np.max(logn + c * et))

    lmax = math.log(C_max)
    if logC(c_min) > lmax:
        bad = np.argwhere(logn + c_min * et > lmax)
        viol = [(float(s[i]), int(k), float(t[j])) for i, k, j in bad]
        return PointwiseFit(math.exp(logC(c_min)), c_min, False, viol, norms)
    lo, hi = c_min, 2 * c_min
    while logC(hi) <= lmax and hi < 1e8:
        lo, hi = hi, 2 * hi
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if logC(mid) <= lmax:
            lo = mid
        else:
            hi = mid
    return PointwiseFit(math.exp(logC(lo)), lo, True, [], norms)


# --------------------------------------------------------------------------
# constraint conservation


def constraint_residual(cb, f, u):
    M = cb.R.astype(complex)
    if f.s > 0:
        M = M + 1j * f.s * cb.Q_at(f.omega)
    return M @ u


def constraint_drift(sys, cb, xi, u0hat, t_grid, tol=1e-10):
    """Largest ``|i|xi| Q u(t) + R u(t)|`` over ``t_grid`` for admissible data."""
    f = xi if isinstance(xi, Frequency) else Frequency(xi)
    u0 = np.asarray(u0hat, dtype=complex)
    r0 = float(np.linalg.norm(constraint_residual(cb, f, u0)))
    if r0 > tol:
        raise ValueError(f"initial data violate the constraint (residual {r0:.3e})")
    G = generator(sys, f)
    drift = 0.0
    for t in t_grid:
        u = sla.expm(t * G) @ u0 if t > 0 else u0
        drift = max(drift, float(np.linalg.norm(constraint_residual(cb, f, u))))
    return drift


# --------------------------------------------------------------------------
# L2 decay


@dataclass(frozen=True)
class Profile:
    """Radial amplitude ``|u0_hat|(s)`` of the initial data.

    ``gaussian:w``  ``exp(-(w s)^2 / 2)``
    ``ring:s0,s1``  indicator of ``[s0, s1]``
    ``powerlaw:sigma[,s_cut]``  ``(1 + s^2)^(-sigma/2)`` for ``s >= s_cut``
    (default ``s_cut = 1``): high-frequency data of finite regularity
    """

    kind: str
    params: tuple

    @classmethod
    def parse(cls, text):
        kind, _, rest = str(text).partition(":")
        vals = tuple(float(v) for v in rest.split(",") if v.strip())
        if kind == "gaussian" and len(vals) == 1 and vals[0] > 0:
            return cls(kind, vals)
        if kind == "ring" and len(vals) == 2 and 0 <= vals[0] < vals[1]:
            return cls(kind, vals)
        if kind == "powerlaw" and len(vals) in (1, 2) and vals[0] > 0:
            return cls(kind, vals if len(vals) == 2 else (vals[0], 1.0))
        raise ValueError(f"bad profile {text!r}")

    @classmethod
    def powerlaw_for(cls, k, ell, n):
        """Data in H^{k+ell} but not H^{k+ell+1}."""
        return cls("powerlaw", (k + ell + n / 2 + 0.25, 1.0))

    def support(self):
        if self.kind == "ring":
            return self.params
        if self.kind == "powerlaw":
            return (self.params[1], np.inf)
        return (0.0, np.inf)

    def amplitude(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "gaussian":
            return np.exp(-0.5 * (self.params[0] * s) ** 2)
        lo, hi = self.support()
        inside = (s >= lo) & (s <= hi)
        if self.kind == "ring":
            return inside.astype(float)
        return np.where(inside, (1.0 + s * s) ** (-0.5 * self.params[0]), 0.0)

    def __str__(self):
        return f"{self.kind}:" + ",".join(f"{v:g}" for v in self.params)


@dataclass
class DecayFit:
    k: int
    ell: int
    t_grid: np.ndarray
    norms: np.ndarray
    fitted_slope: float
    target_slope: float
    fit_window: tuple = None

    @property
    def local_slope(self):
        x = np.log1p(self.t_grid)
        y = np.log(self.norms)
        return np.gradient(y, x) if x.size > 1 else np.zeros_like(x)

    def rows(self):
        for t, nrm, sl in zip(self.t_grid, self.norms, self.local_slope):
            yield float(t), float(nrm), float(sl)


def _sphere_measure(n):
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def _quad_nodes(profile, s_lo=1e-4, s_hi=1e4, nodes=513):
    lo, hi = profile.support()
    a, b = max(s_lo, lo), min(s_hi, hi)
    return np.geomspace(a, b, nodes), lo < s_lo


def decay_norms(sys, profile, k, t_grid, sph=None, cb=None, vector=None,
                s_range=(1e-4, 1e4), nodes=513, check_tail=True):
    """``|d^k u(t)|_{L^2}`` for radial data ``u0_hat(xi) = amplitude(|xi|) v``.

    Radial integral on log-spaced nodes (trapezoid in ``log s``) with the
    sphere average over ``sph``; the interval ``[0, s_min]`` is added with
    the integrand frozen at ``s_min``.  With a constraint block ``v`` is
    projected onto ``N(xi)`` at each sample.
    """
    if nodes < 512:
        raise ValueError(f"need at least 512 quadrature nodes, got {nodes}")
    sph = _sampling(sys, sph)
    n, m = sys.n, sys.m
    v = np.ones(m) / math.sqrt(m) if vector is None else np.asarray(vector, dtype=complex)
    s, add_origin = _quad_nodes(profile, *s_range, nodes)
    amp = profile.amplitude(s)
    G = generator_batch(sys, s, sph.points)                 # (S, W, m, m)
    u0 = np.broadcast_to(v.astype(complex), G.shape[:2] + (m,)).copy()
    if cb is not None:
        B = constraint_bases(cb, s, sph.points)
        u0 = np.einsum("swad,swd->swa", B, np.einsum("swad,a->swd", np.conj(B), v))
        nrm = np.linalg.norm(u0, axis=-1, keepdims=True)
        u0 = u0 / np.where(nrm > 0, nrm, 1.0)
    u0 = u0 * amp[:, None, None]
    t_grid = np.asarray(t_grid, dtype=float)
    dens = np.empty((t_grid.size, s.size))
    for j, t in enumerate(t_grid):
        u = u0 if t == 0 else np.einsum("swab,swb->swa", _expm_batch(t * G), u0)
        dens[j] = np.mean(np.sum(np.abs(u) ** 2, axis=-1), axis=1)
    weight = s ** (2 * k + n - 1)
    f = dens * weight[None, :]
    # trapezoid in u = log s: ds = s du
    g = f * s[None, :]
    du = np.diff(np.log(s))
    integral = np.sum(0.5 * (g[:, 1:] + g[:, :-1]) * du[None, :], axis=1)
    # Euler-Maclaurin end correction -h^2/12 (g'(b) - g'(a)), one-sided differences
    h = du[0]
    ga = (-3 * g[:, 0] + 4 * g[:, 1] - g[:, 2]) / (2 * h)
    gb = (3 * g[:, -1] - 4 * g[:, -2] + g[:, -3]) / (2 * h)
    integral = integral - h * h / 12.0 * (gb - ga)
    if add_origin:
        integral = integral + dens[:, 0] * s[0] ** (2 * k + n) / (2 * k + n)
    if check_tail and not np.isfinite(profile.support()[1]):
        tail = 0.5 * g[:, -1] * du[-1]
        frac = tail / np.maximum(integral, 1e-300)
        if np.any(frac > 1e-6):
            raise ValueError(f"widen s range: last node carries {float(frac.max()):.2e} of the integral")
    return np.sqrt(_sphere_measure(n) * integral)


def l2_decay_fit(sys, profile, k, ell, t_grid, sph=None, cb=None, vector=None,
                 fit_window=None, s_range=(1e-4, 1e4), nodes=513):
    """Measure the decay rate of ``|d^k u(t)|`` on log-log axes.

    The slope is fitted against ``log(1 + t)`` over ``fit_window``
    (default: the last decade of ``t_grid``).
    """
    profile = profile if isinstance(profile, Profile) else Profile.parse(profile)
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) <= 0) or t_grid[0] < 0:
        raise ValueError("t_grid must be nonnegative and increasing")
    norms = decay_norms(sys, profile, k, t_grid, sph, cb, vector, s_range, nodes)
    if fit_window is None:
        fit_window = (t_grid[-1] / 10.0, t_grid[-1])
    sel = (t_grid >= fit_window[0] * (1 - 1e-12)) & (t_grid <= fit_window[1] * (1 + 1e-12))
    if np.count_nonzero(sel) < 2:
        raise ValueError("fit window holds fewer than two times")
    slope = float(np.polyfit(np.log1p(t_grid[sel]), np.log(norms[sel]), 1)[0])
    if profile.kind == "gaussian":
        target = -(sys.n / 4 + k / 2)
    else:
        target = -ell / 2
    return DecayFit(k, ell, t_grid, norms, slope, target, tuple(fit_window))
