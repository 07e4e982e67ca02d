"""Constant-coefficient symmetric hyperbolic systems with relaxation.

A system is ``A0 u_t + sum_j A^j u_{x_j} + L u = 0`` with ``u`` in R^m and
``x`` in R^n.  After a Fourier transform in ``x`` each frequency ``xi``
evolves independently through ``u_hat' = G(xi) u_hat``.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla

__all__ = [
    "StructureError",
    "HyperbolicSystem",
    "Frequency",
    "SubspaceBasis",
    "as_direction",
    "sym_skew_split",
    "kernel_basis",
    "orthogonal_complement",
    "assemble_A",
    "generator",
    "generator_batch",
    "rho_envelope",
    "eta_envelope",
]

KERNEL_TOL = 1e-10


class StructureError(ValueError):
    """Malformed system data (shapes, non-finite entries, singular A0)."""


def _square(name, M, m):
    M = np.asarray(M, dtype=float)
    if M.shape != (m, m):
        raise StructureError(f"{name} has shape {M.shape}, expected ({m}, {m})")
    if not np.all(np.isfinite(M)):
        raise StructureError(f"{name} has non-finite entries")
    return M


@dataclass(frozen=True, eq=False)
class HyperbolicSystem:
    """System data ``(n, m, A0, [A^1..A^n], L)``.

    Matrices are copied and made read-only.  Condition (A) is *not*
    enforced here; see :func:`hyperdiss.conditions.validate_condition_A`.
    """

    n: int
    m: int
    A0: np.ndarray
    A: tuple
    L: np.ndarray

    def __post_init__(self):
        n, m = int(self.n), int(self.m)
        if n < 1 or m < 1:
            raise StructureError(f"dimensions must be positive, got n={n}, m={m}")
        if len(self.A) != n:
            raise StructureError(f"expected {n} flux matrices, got {len(self.A)}")
        A0 = _square("A0", self.A0, m).copy()
        A = tuple(_square(f"A[{j}]", Aj, m).copy() for j, Aj in enumerate(self.A))
        L = _square("L", self.L, m).copy()
        for M in (A0, L) + A:
            M.flags.writeable = False
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "A0", A0)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "L", L)

    @cached_property
    def A0_factor(self):
        """Cholesky factor of A0, computed once per system."""
        try:
            return sla.cho_factor(self.A0, lower=True)
        except np.linalg.LinAlgError as exc:
            raise StructureError("A0 is not positive definite") from exc

    def solve_A0(self, B):
        """Return ``A0^{-1} B``."""
        return sla.cho_solve(self.A0_factor, B)

    @cached_property
    def A0_inv(self):
        return self.solve_A0(np.eye(self.m))

    @cached_property
    def flux_stack(self):
        """``(n, m, m)`` array of the A^j."""
        return np.stack(self.A)

    @cached_property
    def L1(self):
        return sym_skew_split(self.L)[0]

    @cached_property
    def L2(self):
        return sym_skew_split(self.L)[1]


@dataclass(frozen=True)
class Frequency:
    """Fourier variable ``xi`` with derived ``s = |xi|`` and ``omega = xi/s``."""

    xi: np.ndarray
    s: float = field(init=False)
    omega: np.ndarray = field(init=False)

    def __post_init__(self):
        xi = np.atleast_1d(np.asarray(self.xi, dtype=float))
        s = float(np.linalg.norm(xi))
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "omega", xi / s if s > 0 else None)

    @classmethod
    def polar(cls, s, omega):
        return cls(float(s) * as_direction(omega))

    @property
    def rho(self):
        return rho_envelope(self.s)

    @property
    def eta(self):
        return eta_envelope(self.s)


def rho_envelope(s):
    """``|xi|^2 / (1 + |xi|^2)``: the standard-type decay envelope."""
    s2 = np.square(s)
    return s2 / (1.0 + s2)


def eta_envelope(s):
    """``|xi|^2 / (1 + |xi|^2)^2``: the regularity-loss decay envelope."""
    s2 = np.square(s)
    return s2 / (1.0 + s2) ** 2


def as_direction(omega, n=None):
    """Validate a unit vector; scalars are accepted for ``n = 1``."""
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    if w.ndim != 1 or (n is not None and w.shape[0] != n):
        raise StructureError(f"direction has shape {w.shape}, expected ({n},)")
    if abs(np.linalg.norm(w) - 1.0) > 1e-12:
        raise StructureError(f"direction {w} is not a unit vector")
    return w


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """Orthonormal basis (columns) of a subspace of C^m."""

    basis: np.ndarray
    tol: float = KERNEL_TOL

    @property
    def dim(self):
        return self.basis.shape[1]

    @property
    def ambient(self):
        return self.basis.shape[0]

    @cached_property
    def projector(self):
        B = self.basis
        return B @ B.conj().T


def sym_skew_split(M):
    """Return ``((M + M^T)/2, (M - M^T)/2)``."""
    M = np.asarray(M)
    if M.ndim < 2 or M.shape[-1] != M.shape[-2]:
        raise StructureError(f"expected a square matrix, got shape {M.shape}")
    Mt = np.swapaxes(M, -1, -2)
    # both halves are formed directly so that symmetry and skewness are exact;
    # M1 + M2 then reproduces M up to one rounding
    return 0.5 * (M + Mt), 0.5 * (M - Mt)


def kernel_basis(M, tol=KERNEL_TOL):
    """Orthonormal basis of ``{z : M z = 0}``.

    Singular values below ``tol * sigma_max`` count as zero.  ``M`` may be
    rectangular; an all-zero ``M`` has the whole space as kernel.
    """
    if not 0 < tol <= 1e-4:
        raise ValueError(f"tol must lie in (0, 1e-4], got {tol}")
    M = np.atleast_2d(np.asarray(M))
    ncol = M.shape[1]
    _, sv, Vh = np.linalg.svd(M, full_matrices=True)
    smax = sv[0] if sv.size else 0.0
    if smax == 0.0:
        rank = 0
    else:
        rank = int(np.count_nonzero(sv > tol * smax))
    basis = Vh[rank:].conj().T
    if not np.iscomplexobj(M):
        basis = basis.astype(float)
    return SubspaceBasis(np.ascontiguousarray(basis).reshape(ncol, ncol - rank), tol)


def orthogonal_complement(B):
    """Orthonormal basis of the orthogonal complement of ``span(B)``."""
    return kernel_basis(B.basis.conj().T if B.dim else np.zeros((1, B.ambient)), B.tol)


def assemble_A(sys, omega):
    """``A(omega) = sum_j A^j omega_j``."""
    w = as_direction(omega, sys.n)
    return np.tensordot(w, sys.flux_stack, axes=1)


def generator(sys, xi):
    """``G(xi) = -A0^{-1} (i |xi| A(omega) + L)``, so that ``u_hat' = G u_hat``.

    ``xi`` may be a vector or a :class:`Frequency`; at ``xi = 0`` only the
    relaxation part remains.
    """
    f = xi if isinstance(xi, Frequency) else Frequency(xi)
    if f.xi.shape[0] != sys.n:
        raise StructureError(f"frequency has dimension {f.xi.shape[0]}, system has n={sys.n}")
    M = sys.L.astype(complex)
    if f.s > 0:
        # s * A(omega) == A(xi); avoids renormalising omega
        M = M + 1j * np.tensordot(f.xi, sys.flux_stack, axes=1)
    return -sys.solve_A0(M)


def generator_batch(sys, s, omegas):
    """Generators on the grid ``s x omegas``: shape ``(len(s), len(omegas), m, m)``."""
    s = np.asarray(s, dtype=float)
    W = np.asarray(omegas, dtype=float).reshape(-1, sys.n)
    Aw = np.einsum("kj,jab->kab", W, sys.flux_stack)
    Ainv = sys.A0_inv
    GA = -1j * np.einsum("ab,kbc->kac", Ainv, Aw)
    GL = -(Ainv @ sys.L)
    return s[:, None, None, None] * GA[None] + GL[None, None]
