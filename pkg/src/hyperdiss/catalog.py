"""Example systems with their auxiliary matrices S, K and S_tilde.

* ``timoshenko(a, gamma)``: dissipative Timoshenko beam, state
  ``u = (w_x - psi, w_t, a psi_x, psi_t)``.
* ``euler_maxwell(rho_inf, p_prime, B_inf)``: Euler-Maxwell linearised at
  ``(rho_inf, 0, 0, B_inf)``, state ``(rho, v, E, B)`` in R^10, with the
  divergence constraints as a :class:`ConstraintBlock`.
* ``symmetric_toy()``: damped wave (p-system with velocity damping),
  symmetric relaxation.

Each entry carries *predictions* (``expected``); the verifier, spectrum
and decay modules re-derive them independently.
"""

from dataclasses import dataclass, field

import numpy as np

from .compensator import CompensatorSpec, register_builtin
from .conditions import ConstraintBlock
from .system import HyperbolicSystem

__all__ = [
    "CatalogEntry",
    "timoshenko",
    "euler_maxwell",
    "symmetric_toy",
    "omega_matrix",
    "em_S",
    "em_K",
    "BUILDERS",
]


@dataclass
class CatalogEntry:
    name: str
    params: dict
    sys: HyperbolicSystem
    cb: ConstraintBlock = None
    S: np.ndarray = None
    K: CompensatorSpec = None
    S_tilde: np.ndarray = None
    expected: dict = field(default_factory=dict)


# --------------------------------------------------------------------------
# Timoshenko


def timoshenko_matrices(a, gamma):
    A = -np.array([
        [0, 1, 0, 0],
        [1, 0, 0, 0],
        [0, 0, 0, a],
        [0, 0, a, 0],
    ], dtype=float)
    L = np.array([
        [0, 0, 0, 1],
        [0, 0, 0, 0],
        [0, 0, 0, 0],
        [-1, 0, 0, gamma],
    ], dtype=float)
    return np.eye(4), A, L


def timoshenko_S(a, beta):
    return -beta * np.array([
        [0, 0, 0, 1],
        [0, 0, a, 0],
        [0, a, 0, 0],
        [1, 0, 0, 0],
    ], dtype=float)


TIMOSHENKO_K = np.array([
    [0, 1, 0, 0],
    [-1, 0, 0, 0],
    [0, 0, 0, -1],
    [0, 0, 1, 0],
], dtype=float)


def timoshenko_beta_bound(gamma):
    return 4.0 * gamma / (gamma ** 2 + 4.0)


def timoshenko(a=2.0, gamma=1.0, beta=None):
    """Timoshenko beam; ``beta`` defaults to half its admissible bound."""
    a, gamma = float(a), float(gamma)
    if a <= 0 or gamma <= 0:
        raise ValueError(f"timoshenko needs a > 0 and gamma > 0, got a={a}, gamma={gamma}")
    if beta is None:
        beta = 0.5 * timoshenko_beta_bound(gamma)
    A0, A, L = timoshenko_matrices(a, gamma)
    sys = HyperbolicSystem(1, 4, A0, [A], L)
    standard = a == 1.0
    expected = {
        "pass": ["A", "S", "S1", "K", "R"] + (["S2"] if standard else []),
        "fail": [] if standard else ["S2"],
        "type": (1, 1) if standard else (1, 2),
        "envelope": "rho" if standard else "eta",
    }
    return CatalogEntry(
        "timoshenko", {"a": a, "gamma": gamma, "beta": float(beta)}, sys,
        S=timoshenko_S(a, beta), K=CompensatorSpec.constant(TIMOSHENKO_K), expected=expected,
    )


# --------------------------------------------------------------------------
# Euler-Maxwell


def omega_matrix(x):
    """``Omega_x`` with ``Omega_x E = x cross E``."""
    x1, x2, x3 = np.asarray(x, dtype=float)
    return np.array([
        [0.0, -x3, x2],
        [x3, 0.0, -x1],
        [-x2, x1, 0.0],
    ])


def _blocks(rows):
    return np.block(rows)


_Z11 = np.zeros((1, 1))
_Z13 = np.zeros((1, 3))
_Z31 = np.zeros((3, 1))
_Z33 = np.zeros((3, 3))
_I3 = np.eye(3)


def em_constants(rho_inf, p_prime):
    """``(a_inf, b_inf) = (p'(rho)/rho, p'(rho))`` at the background density."""
    return p_prime / rho_inf, p_prime


def em_A0(rho_inf, p_prime):
    a_inf, _ = em_constants(rho_inf, p_prime)
    return _blocks([
        [a_inf * np.eye(1), _Z13, _Z13, _Z13],
        [_Z31, rho_inf * _I3, _Z33, _Z33],
        [_Z31, _Z33, _I3, _Z33],
        [_Z31, _Z33, _Z33, _I3],
    ])


def em_A(xi, rho_inf, p_prime):
    """``A(xi) = sum_j A^j xi_j`` (linear in ``xi``)."""
    _, b_inf = em_constants(rho_inf, p_prime)
    x = np.asarray(xi, dtype=float).reshape(1, 3)
    Om = omega_matrix(x.ravel())
    return _blocks([
        [_Z11, b_inf * x, _Z13, _Z13],
        [b_inf * x.T, _Z33, _Z33, _Z33],
        [_Z31, _Z33, _Z33, -Om],
        [_Z31, _Z33, Om, _Z33],
    ])


def em_L(rho_inf, B_inf):
    OB = omega_matrix(B_inf)
    return _blocks([
        [_Z11, _Z13, _Z13, _Z13],
        [_Z31, rho_inf * (_I3 - OB), rho_inf * _I3, _Z33],
        [_Z31, -rho_inf * _I3, _Z33, _Z33],
        [_Z31, _Z33, _Z33, _Z33],
    ])


def em_Q(xi):
    x = np.asarray(xi, dtype=float).reshape(1, 3)
    return _blocks([
        [_Z11, _Z13, x, _Z13],
        [_Z11, _Z13, _Z13, x],
    ])


def em_R():
    R = np.zeros((2, 10))
    R[0, 0] = 1.0
    return R


def em_S(rho_inf, beta):
    return beta * _blocks([
        [_Z11, _Z13, _Z13, _Z13],
        [_Z31, _Z33, _I3, _Z33],
        [_Z31, _I3 / rho_inf, _Z33, _Z33],
        [_Z31, _Z33, _Z33, _Z33],
    ])


def em_K(omega, rho_inf, p_prime):
    a_inf, _ = em_constants(rho_inf, p_prime)
    w = np.asarray(omega, dtype=float).reshape(1, 3)
    Om = omega_matrix(w.ravel())
    return _blocks([
        [_Z11, w / rho_inf, _Z13, _Z13],
        [-w.T / a_inf, _Z33, _Z33, _Z33],
        [_Z31, _Z33, _Z33, Om],
        [_Z31, _Z33, Om, _Z33],
    ])


def _em_K_builtin(sys, omega, rho_inf, p_prime):
    return em_K(omega, rho_inf, p_prime)


register_builtin("euler-maxwell", _em_K_builtin)


def em_beta_bound(rho_inf, B_inf):
    b = float(np.linalg.norm(B_inf))
    return 4.0 * rho_inf / (4.0 * rho_inf + (1.0 + b) ** 2)


def euler_maxwell(rho_inf=1.0, p_prime=1.0, B_inf=(0.0, 0.0, 1.0), beta=None):
    """Linearised Euler-Maxwell; ``beta`` defaults to half its admissible bound."""
    rho_inf, p_prime = float(rho_inf), float(p_prime)
    B_inf = np.asarray(B_inf, dtype=float).reshape(3)
    if rho_inf <= 0 or p_prime <= 0:
        raise ValueError(f"euler_maxwell needs rho_inf > 0 and p_prime > 0, got {rho_inf}, {p_prime}")
    if beta is None:
        beta = 0.5 * em_beta_bound(rho_inf, B_inf)
    a_inf, _ = em_constants(rho_inf, p_prime)
    A = [em_A(e, rho_inf, p_prime) for e in np.eye(3)]
    sys = HyperbolicSystem(3, 10, em_A0(rho_inf, p_prime), A, em_L(rho_inf, B_inf))
    cb = ConstraintBlock(2, tuple(em_Q(e) for e in np.eye(3)), em_R())
    expected = {
        "pass": ["A", "C", "S", "Sstar1", "Kstar"],
        "fail": [],
        "type": (1, 2),
        "envelope": "eta",
    }
    return CatalogEntry(
        "euler-maxwell",
        {"rho": rho_inf, "pprime": p_prime, "B": B_inf.tolist(), "beta": float(beta)},
        sys, cb=cb, S=em_S(rho_inf, beta),
        K=CompensatorSpec.builtin("euler-maxwell", rho_inf=rho_inf, p_prime=p_prime),
        S_tilde=beta * a_inf * np.eye(2), expected=expected,
    )


# --------------------------------------------------------------------------
# symmetric toy


def symmetric_toy(mu=None):
    """Damped wave ``v_t - w_x = 0, w_t - v_x + w = 0`` with symmetric ``L``.

    ``K`` is the Kalman-stack compensator; with ``mu`` None the halving
    search picks it.
    """
    A0 = np.eye(2)
    A = np.array([[0.0, -1.0], [-1.0, 0.0]])
    L = np.diag([0.0, 1.0])
    sys = HyperbolicSystem(1, 2, A0, [A], L)
    if mu is None:
        from .compensator import tune_mu
        K, _ = tune_mu(sys)
    else:
        K = CompensatorSpec.kalman(mu, m=2)
    expected = {
        "pass": ["A", "S", "S1", "S2", "K", "R"],
        "fail": [],
        "type": (1, 1),
        "envelope": "rho",
    }
    return CatalogEntry("damped-wave", {}, sys, S=np.zeros((2, 2)), K=K, expected=expected)


BUILDERS = {
    "timoshenko": timoshenko,
    "euler-maxwell": euler_maxwell,
    "damped-wave": symmetric_toy,
}
