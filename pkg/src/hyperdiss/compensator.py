"""Compensating matrices K(omega).

Three representations are supported: a closed form registered by name
(the catalog registers its hand-built compensators), the constructive
Kalman-stack formula driven by ``(mu, kappa)``, and a constant matrix for
one space dimension with ``K(omega) = omega * K``.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import conditions
from .system import StructureError

log = logging.getLogger(__name__)

__all__ = [
    "CompensatorSpec",
    "CompensatorError",
    "register_builtin",
    "kappa_sequence",
    "kappa_nu",
    "build_K",
    "tune_mu",
    "cayley_hamilton_residual",
    "mu_bound",
]

_BUILTIN = {}


class CompensatorError(RuntimeError):
    pass


def register_builtin(name, factory):
    """``factory(sys, omega, **params) -> (m, m) array``."""
    _BUILTIN[name] = factory


@dataclass(frozen=True)
class CompensatorSpec:
    variant: str
    name: str = None
    params: dict = field(default_factory=dict)
    mu: float = None
    kappa: tuple = None
    K: np.ndarray = None

    def __post_init__(self):
        if self.variant == "kalman":
            if not 0 < self.mu < 1:
                raise ValueError(f"mu must lie in (0, 1), got {self.mu}")
            kappa = tuple(float(k) for k in self.kappa)
            kappa_nu(kappa)
            object.__setattr__(self, "kappa", kappa)
        elif self.variant == "constant":
            K = np.array(self.K, dtype=float)
            K.flags.writeable = False
            object.__setattr__(self, "K", K)
        elif self.variant == "builtin":
            if self.name not in _BUILTIN:
                raise KeyError(f"unknown builtin compensator {self.name!r}")
        else:
            raise ValueError(f"unknown compensator variant {self.variant!r}")

    @classmethod
    def kalman(cls, mu, m=None, kappa=None):
        if kappa is None:
            kappa = kappa_sequence(m)
        return cls("kalman", mu=float(mu), kappa=tuple(kappa))

    @classmethod
    def constant(cls, K):
        return cls("constant", K=np.asarray(K, dtype=float))

    @classmethod
    def builtin(cls, name, **params):
        return cls("builtin", name=name, params=dict(params))

    def matrix(self, sys, omega):
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        if self.variant == "kalman":
            return build_K(sys, self, omega)
        if self.variant == "constant":
            if sys.n != 1:
                raise StructureError("constant compensators need n = 1")
            if self.K.shape != (sys.m, sys.m):
                raise StructureError(f"K has shape {self.K.shape}, expected ({sys.m}, {sys.m})")
            return omega[0] * self.K
        return np.asarray(_BUILTIN[self.name](sys, omega, **self.params), dtype=float)

    def to_dict(self):
        if self.variant == "kalman":
            return {"variant": "kalman", "mu": self.mu, "kappa": list(self.kappa),
                    "nu": kappa_nu(self.kappa)}
        if self.variant == "constant":
            return {"variant": "constant", "matrix": self.K.tolist()}
        return {"variant": "builtin", "name": self.name, "params": _jsonable(self.params)}

    @classmethod
    def from_dict(cls, d):
        v = d.get("variant")
        if v == "kalman":
            return cls("kalman", mu=float(d["mu"]), kappa=tuple(d["kappa"]))
        if v == "constant":
            return cls.constant(d["matrix"])
        if v == "builtin":
            return cls.builtin(d["name"], **d.get("params", {}))
        raise ValueError(f"unknown compensator variant {v!r}")


def _jsonable(params):
    out = {}
    for k, v in params.items():
        out[k] = np.asarray(v).tolist() if isinstance(v, (np.ndarray, list, tuple)) else v
    return out


def kappa_sequence(m):
    """``kappa_k = k (2m - k)``, k = 0..m: increasing, second difference -2."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    return tuple(float(k * (2 * m - k)) for k in range(m + 1))


def kappa_nu(kappa):
    """Largest ``nu`` with ``kappa_k - (kappa_{k-1} + kappa_{k+1})/2 >= nu``.

    Raises if the sequence is not ``0 = kappa_0 < kappa_1 < ...`` or not
    strictly concave.  Returns inf when the midpoint clause is vacuous.
    """
    k = np.asarray(kappa, dtype=float)
    if k.ndim != 1 or k.size < 2 or k[0] != 0.0 or np.any(np.diff(k) <= 0):
        raise ValueError(f"kappa must start at 0 and increase strictly, got {kappa}")
    if k.size < 3:
        return float("inf")
    nu = float(np.min(k[1:-1] - 0.5 * (k[:-2] + k[2:])))
    if nu <= 0:
        raise ValueError(f"kappa violates the midpoint condition (nu = {nu})")
    return nu


def _powers(sys, omega):
    At = sys.solve_A0(np.tensordot(np.atleast_1d(omega), sys.flux_stack, axes=1))
    LAk = [sys.L]
    for _ in range(sys.m):
        LAk.append(LAk[-1] @ At)
    return At, LAk


def build_K(sys, spec, omega):
    """Kalman-stack compensator

    ``K = sum_{k=1}^{m-1} mu^kappa_k [(L At^k)^T L At^{k-1} - (L At^{k-1})^T L At^k] A0^{-1}``.
    """
    _, LAk = _powers(sys, omega)
    m = sys.m
    acc = np.zeros((m, m))
    for k in range(1, m):
        X, Y = LAk[k], LAk[k - 1]
        acc += spec.mu ** spec.kappa[k] * (X.T @ Y - Y.T @ X)
    return acc @ sys.A0_inv


def cayley_hamilton_residual(sys, omega):
    """``|At^m + sum_k a_k At^k|`` relative to ``max(1, |At|^m)``."""
    At, _ = _powers(sys, omega)
    coeffs = np.poly(At)  # monic, highest power first
    m = sys.m
    acc = np.zeros_like(At)
    P = np.eye(m)
    for k in range(m + 1):
        acc = acc + coeffs[m - k] * P
        P = P @ At
    return float(np.linalg.norm(acc)) / max(1.0, float(np.linalg.norm(At)) ** m)


def mu_bound(sys, sph=None, kappa=None):
    """Diagnostic: the ``mu`` below which ``mu^nu (1 + C1) < 1``.

    ``C1`` bounds the squared characteristic-polynomial coefficients of
    ``At`` over the sampled sphere.  This bound is conservative; the
    halving search in :func:`tune_mu` normally stops far above it.
    """
    sph = conditions._sampling(sys, sph)
    kappa = kappa_sequence(sys.m) if kappa is None else kappa
    nu = kappa_nu(kappa)
    C1 = 0.0
    for w in sph.points:
        At, _ = _powers(sys, w)
        C1 = max(C1, float(np.max(np.abs(np.poly(At)[1:]) ** 2)))
    if not np.isfinite(nu):
        return 1.0, C1
    return float((1.0 + C1) ** (-1.0 / nu)), C1


def _KA1_scale(sys, spec, sph):
    s = 0.0
    for w in sph.points:
        KA = spec.matrix(sys, w) @ np.tensordot(w, sys.flux_stack, axes=1)
        s = max(s, float(np.linalg.norm(0.5 * (KA + KA.T), 2)))
    return s


def tune_mu(sys, sph=None, target_margin=1e-6, kappa=None, predicate=None, cb=None,
            max_halvings=40, require_R=True):
    """Halve ``mu`` from 1/2 until the compensator certifies positivity.

    ``predicate(sys, spec, sph) -> ConditionEntry`` decides acceptance;
    the default is :func:`conditions.check_K`, or ``check_Kstar`` when a
    constraint block is given.  A candidate is accepted when the entry
    passes with ``margin >= target_margin * |(K A)_1|``.

    Returns ``(spec, entry)``; the entry's name says which predicate
    certified.
    """
    sph = conditions._sampling(sys, sph)
    if require_R:
        r = conditions.check_R(sys, sph)
        if not r.passed and cb is None:
            raise CompensatorError(f"rank condition fails ({r.details}); refusing to tune mu")
    if predicate is None:
        if cb is None:
            predicate = conditions.check_K
        else:
            def predicate(sys_, spec_, sph_):
                return conditions.check_Kstar(sys_, cb, spec_, sph_)
    kappa = kappa_sequence(sys.m) if kappa is None else tuple(kappa)
    trajectory = []
    for j in range(1, max_halvings + 1):
        spec = CompensatorSpec.kalman(2.0 ** -j, kappa=kappa)
        entry = predicate(sys, spec, sph)
        scale = _KA1_scale(sys, spec, sph)
        trajectory.append((spec.mu, entry.margin))
        if entry.passed and entry.margin >= target_margin * scale:
            log.info("tune_mu: mu = 2^-%d certified by %s (margin %.3g)", j, entry.name, entry.margin)
            return spec, entry
    worst = entry.worst_omega
    raise CompensatorError(
        f"no mu >= 2^-{max_halvings} certifies; worst omega {worst}, "
        f"margin trajectory {[(f'{m:.3g}', f'{g:.3g}') for m, g in trajectory[-5:]]}"
    )
