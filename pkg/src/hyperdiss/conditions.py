"""Structural dissipativity conditions, checked numerically with margins.

Every check returns a :class:`ConditionEntry`.  Conditions quantified over
all directions are evaluated on a :class:`SphereSampling`; for ``n = 1``
the sampling ``{+1, -1}`` is the whole sphere, so such passes are exact.
For ``n >= 2`` a pass is only certified on the sampled directions, a
failure is certified outright.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .system import (
    KERNEL_TOL,
    StructureError,
    SubspaceBasis,
    kernel_basis,
    orthogonal_complement,
    sym_skew_split,
)

log = logging.getLogger(__name__)

__all__ = [
    "ConditionEntry",
    "ConditionReport",
    "SphereSampling",
    "ConstraintBlock",
    "AlphaResult",
    "validate_condition_A",
    "min_eig_on_subspace",
    "check_S",
    "check_S1",
    "check_S2",
    "check_K",
    "find_alpha",
    "check_R",
    "stack_rank",
    "kalman_stack",
    "check_C",
    "subspace_X",
    "intersect_subspaces",
    "constraint_subspace",
    "check_Kstar",
    "check_Sstar",
    "compensator_matrix",
    "condition_suite",
]

# relative thresholds
PD_REL = 1e-9          # definite: margin > PD_REL*|H|; semidefinite: margin >= -PD_REL*|H|
SYM_REL = 1e-10
ANGLE_TOL = 1e-8
IDENTITY_TOL = 1e-10
RANK_REL = 1e-10

DEFAULT_SEED = 12345  # directions for n >= 4

CONDITION_NAMES = ("A", "S", "S1", "S2", "K", "Kstar", "R", "C", "Sstar1", "Sstar2")


@dataclass
class ConditionEntry:
    name: str
    passed: bool
    margin: float
    tol: float
    worst_omega: np.ndarray = None
    details: str = ""
    warnings: list = field(default_factory=list)

    def to_dict(self):
        w = self.worst_omega
        return {
            "passed": bool(self.passed),
            "margin": float(self.margin),
            "worst_omega": None if w is None else [float(x) for x in np.atleast_1d(w)],
            "tol": float(self.tol),
            "details": self.details,
            "warnings": list(self.warnings),
        }


@dataclass
class ConditionReport:
    entries: dict = field(default_factory=dict)
    alpha: float = None

    def add(self, entry):
        self.entries[entry.name] = entry
        return entry

    def __getitem__(self, name):
        return self.entries[name]

    def __contains__(self, name):
        return name in self.entries

    def passed(self, names=None):
        names = self.entries if names is None else names
        return all(self.entries[k].passed for k in names)

    def to_dict(self):
        return {
            "conditions": {k: v.to_dict() for k, v in self.entries.items()},
            "alpha": None if self.alpha is None else float(self.alpha),
        }


# --------------------------------------------------------------------------
# sphere sampling


def _fibonacci_sphere(count):
    i = np.arange(count) + 0.5
    z = 1.0 - 2.0 * i / count
    r = np.sqrt(1.0 - z * z)
    phi = np.pi * (3.0 - np.sqrt(5.0)) * np.arange(count)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


@dataclass(frozen=True, eq=False)
class SphereSampling:
    """A finite set of unit directions in R^n."""

    n: int
    points: np.ndarray
    scheme: str

    @property
    def count(self):
        return self.points.shape[0]

    @property
    def exact(self):
        return self.scheme == "exact-pair"

    @classmethod
    def default(cls, n, count=None, seed=None):
        if n == 1:
            return cls(1, np.array([[1.0], [-1.0]]), "exact-pair")
        if n == 2:
            count = 256 if count is None else count
            th = 2.0 * np.pi * np.arange(count) / count
            return cls(2, np.column_stack([np.cos(th), np.sin(th)]), "uniform-angle")
        if n == 3:
            count = 512 if count is None else count
            return cls(3, _fibonacci_sphere(count), "fibonacci")
        count = 512 if count is None else count
        g = np.random.default_rng(DEFAULT_SEED if seed is None else seed).standard_normal((count, n))
        return cls(n, g / np.linalg.norm(g, axis=1, keepdims=True), "gaussian")

    @classmethod
    def from_points(cls, points, scheme="explicit"):
        P = np.atleast_2d(np.asarray(points, dtype=float))
        P = P / np.linalg.norm(P, axis=1, keepdims=True)
        return cls(P.shape[1], P, scheme)

    def refine(self):
        """A strict superset of the current points (at least twice as many)."""
        if self.exact:
            return self
        if self.scheme == "uniform-angle" and self.n == 2:
            return SphereSampling.default(2, 2 * self.count)
        if self.n == 3:
            extra = SphereSampling.default(3, 2 * self.count)
        else:
            extra = SphereSampling.default(self.n, self.count, seed=DEFAULT_SEED + self.count)
        pts = np.vstack([self.points, extra.points])
        _, keep = np.unique(np.round(pts, 14), axis=0, return_index=True)
        return SphereSampling(self.n, pts[np.sort(keep)], self.scheme)


def _sampling(sys, sph):
    return SphereSampling.default(sys.n) if sph is None else sph


def _passes_label(sph):
    return "exact (whole sphere)" if sph.exact else f"sampled-certified on {sph.count} directions"


# --------------------------------------------------------------------------
# constraint block


@dataclass(frozen=True, eq=False)
class ConstraintBlock:
    """Side condition ``sum_j Q^j u_{x_j} + R u = 0`` with ``m1`` rows."""

    m1: int
    Q: tuple
    R: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.R, dtype=float)
        Q = tuple(np.asarray(q, dtype=float) for q in self.Q)
        m1 = int(self.m1)
        if R.ndim != 2 or R.shape[0] != m1:
            raise StructureError(f"R has shape {R.shape}, expected {m1} rows")
        m = R.shape[1]
        if not m1 < m:
            raise StructureError(f"constraint needs m1 < m, got m1={m1}, m={m}")
        for j, q in enumerate(Q):
            if q.shape != (m1, m):
                raise StructureError(f"Q[{j}] has shape {q.shape}, expected ({m1}, {m})")
        object.__setattr__(self, "m1", m1)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)

    @property
    def m(self):
        return self.R.shape[1]

    @property
    def n(self):
        return len(self.Q)

    def Q_at(self, omega):
        return np.tensordot(np.atleast_1d(omega), np.stack(self.Q), axes=1)

    @cached_property
    def image_R(self):
        """Orthonormal basis of Image(R) in C^{m1}."""
        U, sv, _ = np.linalg.svd(self.R)
        r = int(np.count_nonzero(sv > KERNEL_TOL * sv[0])) if sv.size and sv[0] > 0 else 0
        return U[:, :r]

    @cached_property
    def Pi1(self):
        U = self.image_R
        return U @ U.T

    @cached_property
    def Pi2(self):
        return np.eye(self.m1) - self.Pi1

    @classmethod
    def trivial(cls, n, m):
        return cls(1, tuple(np.zeros((1, m)) for _ in range(n)), np.zeros((1, m)))


# --------------------------------------------------------------------------
# compensators: anything with .matrix(sys, omega) or a plain callable


def compensator_matrix(K, sys, omega):
    if hasattr(K, "matrix"):
        M = K.matrix(sys, omega)
    elif callable(K):
        M = K(omega)
    else:
        M = np.asarray(K, dtype=float) * float(np.atleast_1d(omega)[0])
    M = np.asarray(M, dtype=float)
    if M.shape != (sys.m, sys.m):
        raise StructureError(f"compensator has shape {M.shape}, expected ({sys.m}, {sys.m})")
    return M


# --------------------------------------------------------------------------
# helpers


def _norm2(H):
    return float(np.linalg.norm(H, 2)) if H.size else 0.0


def _restricted_min_eig(H, B):
    Hb = B.conj().T @ H @ B
    Hb = 0.5 * (Hb + Hb.conj().T)
    return float(np.linalg.eigvalsh(Hb)[0])


def min_eig_on_subspace(H, B):
    """Smallest eigenvalue of the Hermitian form ``H`` restricted to ``span(B)``."""
    basis = B.basis if isinstance(B, SubspaceBasis) else np.asarray(B)
    if basis.ndim != 2 or basis.shape[1] == 0:
        raise ValueError("vacuous subspace")
    return _restricted_min_eig(np.asarray(H), basis)


def _sym_residual(M):
    return float(np.linalg.norm(M - M.T)) / max(1.0, float(np.linalg.norm(M)))


def _subspaces_equal(B1, B2):
    if B1.dim != B2.dim:
        return False, np.pi / 2
    if B1.dim == 0:
        return True, 0.0
    ang = float(np.max(sla.subspace_angles(B1.basis, B2.basis)))
    return ang < ANGLE_TOL, ang


# --------------------------------------------------------------------------
# condition (A)


def validate_condition_A(sys, tol=KERNEL_TOL):
    """Symmetry of A0 and A^j, A0 > 0, L >= 0 and nontrivial Ker(L)."""
    if sys.A0.shape != (sys.m, sys.m):
        raise StructureError("dimension mismatch")
    sym_res = max([_sym_residual(sys.A0)] + [_sym_residual(Aj) for Aj in sys.A])
    A0s = sym_skew_split(sys.A0)[0]
    lam_A0 = float(np.linalg.eigvalsh(A0s)[0])
    L1 = sys.L1
    lam_L1 = float(np.linalg.eigvalsh(L1)[0])
    normL = _norm2(sys.L)
    kerL = kernel_basis(sys.L, tol)
    warnings = []
    ok_sym = sym_res < SYM_REL
    ok_A0 = lam_A0 > PD_REL * max(_norm2(A0s), 1e-300)
    ok_L = lam_L1 >= -PD_REL * normL
    ok_ker = kerL.dim > 0
    if normL == 0.0:
        warnings.append("L = 0: no dissipation")
    margin = lam_A0 if ok_L else min(lam_A0, lam_L1)
    if not ok_ker:
        margin = min(margin, 0.0)
    if not ok_sym:
        margin = min(margin, -sym_res)
    details = (
        f"symmetry residual {sym_res:.3e}; lambda_min(A0) = {lam_A0:.6g}; "
        f"lambda_min(L1) = {lam_L1:.6g}; dim Ker(L) = {kerL.dim}"
    )
    return ConditionEntry(
        "A", ok_sym and ok_A0 and ok_L and ok_ker, margin, PD_REL,
        None, details, warnings,
    )


# --------------------------------------------------------------------------
# condition (S) and its variants


def check_S(sys, S, tol=KERNEL_TOL):
    """(S A0) symmetric, (SL)_1 + L_1 >= 0 with kernel equal to Ker(L)."""
    S = np.asarray(S, dtype=float)
    SA0 = S @ sys.A0
    res = _sym_residual(SA0)
    M = sym_skew_split(S @ sys.L)[0] + sys.L1
    lam = float(np.linalg.eigvalsh(M)[0])
    nM = _norm2(M)
    kerM = kernel_basis(M, tol) if nM > 0 else SubspaceBasis(np.eye(sys.m), tol)
    kerL = kernel_basis(sys.L, tol)
    same, angle = _subspaces_equal(kerM, kerL)
    perp = orthogonal_complement(kerL)
    warnings = []
    if perp.dim:
        margin = min_eig_on_subspace(M, perp)
    else:
        margin = 0.0
        warnings.append("Ker(L) is the whole space: positivity clause is vacuous")
    semidef = lam >= -PD_REL * nM
    passed = res < SYM_REL and semidef and same and (perp.dim == 0 or margin > PD_REL * nM)
    if res >= SYM_REL:
        margin = min(margin, -res)
    details = (
        f"|SA0 - (SA0)^T| = {res:.3e}; lambda_min((SL)_1 + L_1) = {lam:.6g}; "
        f"dim Ker = {kerM.dim} vs dim Ker(L) = {kerL.dim}, max principal angle {angle:.2e}"
    )
    return ConditionEntry("S", passed, margin, PD_REL, None, details, warnings)


def _flux_batch(sys, W):
    return np.einsum("kj,jab->kab", W, sys.flux_stack)


def _semidef_sweep(name, H_batch, basis, sph, label):
    """Nonnegativity of a batch of Hermitian forms on a fixed subspace."""
    if basis.shape[1] == 0:
        return ConditionEntry(name, True, 0.0, PD_REL, None, f"vacuous: {label} is trivial",
                              [f"{label} is trivial"])
    Hb = np.einsum("ai,kab,bj->kij", basis.conj(), H_batch, basis)
    Hb = 0.5 * (Hb + np.conj(np.swapaxes(Hb, -1, -2)))
    lam = np.linalg.eigvalsh(Hb)[:, 0]
    norms = np.linalg.norm(H_batch, ord=2, axis=(1, 2))
    ok = lam >= -PD_REL * norms
    k = int(np.argmin(lam))
    return ConditionEntry(
        name, bool(np.all(ok)), float(lam[k]), PD_REL, sph.points[k].copy(),
        f"min eigenvalue on {label}; {_passes_label(sph) if np.all(ok) else 'failure certified'}",
    )


def _skew_SA(sys, S, sph, T_batch=None):
    W = sph.points
    SA = np.einsum("ab,kbc->kac", np.asarray(S, float), _flux_batch(sys, W))
    if T_batch is not None:
        SA = SA - T_batch
    SA2 = 0.5 * (SA - np.swapaxes(SA, -1, -2))
    return 1j * SA2


def check_S1(sys, S, sph=None, tol=KERNEL_TOL):
    """``i (S A(omega))_2 >= 0`` on Ker(L_1)."""
    sph = _sampling(sys, sph)
    return _semidef_sweep("S1", _skew_SA(sys, S, sph), kernel_basis(sys.L1, tol).basis,
                          sph, "Ker(L1)")


def check_S2(sys, S, sph=None):
    """``i (S A(omega))_2 >= 0`` on all of C^m."""
    sph = _sampling(sys, sph)
    return _semidef_sweep("S2", _skew_SA(sys, S, sph), np.eye(sys.m), sph, "C^m")


# --------------------------------------------------------------------------
# condition (K)


def _K_structure(sys, K, sph):
    """Per-direction K, oddness and A0-skewness residuals."""
    Ks = np.stack([compensator_matrix(K, sys, w) for w in sph.points])
    Kneg = np.stack([compensator_matrix(K, sys, -w) for w in sph.points])
    scale = max(1.0, float(np.max(np.abs(Ks)))) if Ks.size else 1.0
    odd = float(np.max(np.abs(Kneg + Ks))) / scale
    KA0 = Ks @ sys.A0
    skew = float(np.max(np.abs(KA0 + np.swapaxes(KA0, -1, -2)))) / scale
    return Ks, odd, skew


def _KA1(sys, Ks, sph):
    KA = Ks @ _flux_batch(sys, sph.points)
    return 0.5 * (KA + np.swapaxes(KA, -1, -2))


def check_K(sys, K, sph=None, tol=KERNEL_TOL):
    """Compensating matrix: odd, ``K A0`` skew, ``(K A)_1 > 0`` on Ker(L)."""
    sph = _sampling(sys, sph)
    Ks, odd, skew = _K_structure(sys, K, sph)
    H = _KA1(sys, Ks, sph)
    kerL = kernel_basis(sys.L, tol).basis
    if kerL.shape[1] == 0:
        return ConditionEntry("K", True, 0.0, PD_REL, None, "vacuous: Ker(L) trivial",
                              ["Ker(L) is trivial"])
    Hb = np.einsum("ai,kab,bj->kij", kerL, H, kerL)
    lam = np.linalg.eigvalsh(0.5 * (Hb + np.swapaxes(Hb, -1, -2)))[:, 0]
    norms = np.linalg.norm(H, ord=2, axis=(1, 2))
    ok = lam > PD_REL * norms
    ok_struct = odd < IDENTITY_TOL and skew < IDENTITY_TOL
    k = int(np.argmin(lam))
    passed = bool(np.all(ok)) and ok_struct
    details = (
        f"min eigenvalue of (K A)_1 on Ker(L); oddness residual {odd:.2e}, "
        f"(K A0) skew residual {skew:.2e}; "
        + (_passes_label(sph) if passed else "failure certified")
    )
    return ConditionEntry("K", passed, float(lam[k]), PD_REL, sph.points[k].copy(), details)


@dataclass
class AlphaResult:
    """``alpha`` maximises the certified margin; ``alpha_max`` bounds the certified set."""

    alpha: float
    margin: float
    alpha_max: float


def find_alpha(sys, S, K, sph=None, cb=None, tol=KERNEL_TOL, alpha_min=1e-8):
    """Find ``alpha`` in (0, 1] with ``alpha (K A)_1 + (S L)_1 + L_1 > 0``.

    With ``S`` None the ``(S L)_1`` term is dropped.  With a constraint
    block the positivity is required on ``X_omega`` only.  Returns None
    when no ``alpha >= alpha_min`` certifies.
    """
    sph = _sampling(sys, sph)
    Ks = np.stack([compensator_matrix(K, sys, w) for w in sph.points])
    H = _KA1(sys, Ks, sph)
    M = sys.L1.copy()
    if S is not None:
        M = M + sym_skew_split(np.asarray(S, float) @ sys.L)[0]
    if cb is None:
        Hb, Mb = H, np.broadcast_to(M, H.shape)
    else:
        Hb, Mb = [], []
        for k, w in enumerate(sph.points):
            B = subspace_X(cb, w, tol).basis
            Hb.append(B.conj().T @ H[k] @ B)
            Mb.append(B.conj().T @ M @ B)
        Hb, Mb = np.stack(Hb), np.stack(Mb)
    scale = float(np.max(np.linalg.norm(H, ord=2, axis=(1, 2)))) + _norm2(M)
    thr = PD_REL * scale

    def margin(a):
        X = a * Hb + Mb
        X = 0.5 * (X + np.conj(np.swapaxes(X, -1, -2)))
        return float(np.min(np.linalg.eigvalsh(X)[:, 0]))

    if margin(1.0) > thr:
        alpha_max = 1.0
    else:
        hi, lo = 1.0, 0.5
        while margin(lo) <= thr:
            hi, lo = lo, lo / 2
            if lo < alpha_min:
                log.info("find_alpha: no alpha >= %g certifies", alpha_min)
                return None
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if margin(mid) > thr:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-12 * hi:
                break
        alpha_max = lo
    # concave in alpha: golden section for the best-margin alpha
    a, b = 0.0, alpha_max
    g = 0.5 * (np.sqrt(5.0) - 1.0)
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = margin(c), margin(d)
    for _ in range(60):
        if fc < fd:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = margin(d)
        else:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = margin(c)
    best = c if fc >= fd else d
    return AlphaResult(float(best), float(max(fc, fd)), float(alpha_max))


# --------------------------------------------------------------------------
# condition (R)


def kalman_stack(sys, omega):
    """``[L; L At; ...; L At^{m-1}]`` with ``At = A0^{-1} A(omega)``."""
    At = sys.solve_A0(np.tensordot(np.atleast_1d(omega), sys.flux_stack, axes=1))
    blocks = [sys.L]
    for _ in range(sys.m - 1):
        blocks.append(blocks[-1] @ At)
    return np.vstack(blocks)


def stack_rank(blocks, tol=RANK_REL):
    """Numerical rank of the vertically stacked blocks, with the singular values.

    Singular values above ``tol * sigma_max`` count; an all-zero stack has
    rank 0.
    """
    sv = np.linalg.svd(np.vstack(blocks), compute_uv=False)
    rank = int(np.count_nonzero(sv > tol * sv[0])) if sv.size and sv[0] > 0 else 0
    return rank, sv


def check_R(sys, sph=None, tol=RANK_REL):
    """Kalman rank condition: the stacked matrix has full column rank."""
    sph = _sampling(sys, sph)
    smin = np.empty(sph.count)
    smax = np.empty(sph.count)
    ranks = np.empty(sph.count, dtype=int)
    for k, w in enumerate(sph.points):
        ranks[k], sv = stack_rank([kalman_stack(sys, w)], tol)
        smin[k], smax[k] = sv[-1], sv[0]
    k = int(np.argmin(smin))
    passed = bool(np.all(ranks == sys.m))
    details = f"min rank {int(ranks.min())} of {sys.m}; " + (
        _passes_label(sph) if passed else "failure certified")
    return ConditionEntry("R", passed, float(smin[k]), tol, sph.points[k].copy(), details)


# --------------------------------------------------------------------------
# constraints


def check_C(sys, cb, sph=None, tol=IDENTITY_TOL):
    """The three identities that make the constraint invariant in time."""
    sph = _sampling(sys, sph)
    AiL = sys.solve_A0(sys.L)
    RAiL = cb.R @ AiL
    worst = (0.0, None, "")
    res2 = float(np.max(np.abs(RAiL))) if RAiL.size else 0.0
    if res2 > worst[0]:
        worst = (res2, None, "R A0^-1 L")
    for w in sph.points:
        Qw = cb.Q_at(w)
        AiA = sys.solve_A0(np.tensordot(w, sys.flux_stack, axes=1))
        r1 = float(np.max(np.abs(Qw @ AiA)))
        r3 = float(np.max(np.abs(Qw @ AiL + cb.R @ AiA)))
        if r1 > worst[0]:
            worst = (r1, w.copy(), "Q A0^-1 A")
        if r3 > worst[0]:
            worst = (r3, w.copy(), "Q A0^-1 L + R A0^-1 A")
    scale = max(1.0, _norm2(np.stack(cb.Q).reshape(-1, cb.m)) + _norm2(cb.R)) * max(
        1.0, _norm2(sys.A0_inv) * (_norm2(sys.L) + _norm2(sys.flux_stack.reshape(-1, sys.m))))
    passed = worst[0] < tol * scale
    details = f"max identity residual {worst[0]:.3e}" + (f" ({worst[2]})" if worst[2] else "")
    if passed:
        details += "; constraint i|xi|Q u + R u is conserved along solutions"
    return ConditionEntry("C", passed, tol * scale - worst[0], tol, worst[1], details)


def subspace_X(cb, omega, tol=KERNEL_TOL):
    """``X_omega = Ker(Pi2 Q(omega))``."""
    return kernel_basis(cb.Pi2 @ cb.Q_at(omega), tol)


def intersect_subspaces(B1, B2, tol=KERNEL_TOL):
    """Intersection via the kernel of ``(I - P1) + (I - P2)``."""
    m = B1.ambient
    M = 2.0 * np.eye(m) - B1.projector - B2.projector
    if np.linalg.norm(M) == 0.0:
        return SubspaceBasis(np.eye(m), tol)
    # eigen-decomposition of a PSD matrix is better conditioned than SVD rank here
    lam, V = np.linalg.eigh(0.5 * (M + M.conj().T))
    keep = lam < 1e-8
    return SubspaceBasis(V[:, keep], tol)


def constraint_subspace(cb, s, omega=None, tol=KERNEL_TOL):
    """``N(xi) = Ker(i |xi| Q(omega) + R)``: states satisfying the constraint."""
    M = cb.R.astype(complex)
    if s > 0:
        M = M + 1j * s * cb.Q_at(omega)
    return kernel_basis(M, tol)


def check_Kstar(sys, cb, K, sph=None, tol=KERNEL_TOL):
    """``(K A)_1 > 0`` on ``X_omega`` intersected with Ker(L)."""
    if cb is None:
        e = check_K(sys, K, sph, tol)
        e.name = "Kstar"
        return e
    sph = _sampling(sys, sph)
    Ks, odd, skew = _K_structure(sys, K, sph)
    H = _KA1(sys, Ks, sph)
    kerL = kernel_basis(sys.L, tol)
    lam = np.empty(sph.count)
    ok = np.empty(sph.count, dtype=bool)
    warnings = []
    for k, w in enumerate(sph.points):
        Bi = intersect_subspaces(subspace_X(cb, w, tol), kerL, tol)
        if Bi.dim == 0:
            lam[k], ok[k] = np.inf, True
            if not warnings:
                warnings.append("empty intersection at some directions: vacuous there")
            continue
        lam[k] = _restricted_min_eig(H[k], Bi.basis)
        ok[k] = lam[k] > PD_REL * _norm2(H[k])
    k = int(np.argmin(lam))
    passed = bool(np.all(ok)) and odd < IDENTITY_TOL and skew < IDENTITY_TOL
    margin = float(lam[k]) if np.isfinite(lam[k]) else 0.0
    details = (
        f"min eigenvalue of (K A)_1 on X_omega & Ker(L); oddness residual {odd:.2e}, "
        f"skew residual {skew:.2e}; " + (_passes_label(sph) if passed else "failure certified")
    )
    return ConditionEntry("Kstar", passed, margin, PD_REL, sph.points[k].copy(), details, warnings)


def T_matrix(cb, S_tilde, omega):
    """``T(omega) = (Pi1 Q(omega))^T S_tilde R``."""
    return (cb.Pi1 @ cb.Q_at(omega)).T @ np.asarray(S_tilde, float) @ cb.R


def check_Sstar(sys, cb, S, S_tilde, sph=None, variant=1, tol=KERNEL_TOL):
    """``i (S A(omega) - T(omega))_2 >= 0`` on Ker(L_1) (variant 1) or C^m (variant 2)."""
    if variant not in (1, 2):
        raise ValueError(f"variant must be 1 or 2, got {variant}")
    sph = _sampling(sys, sph)
    name = f"Sstar{variant}"
    St = np.asarray(S_tilde, dtype=float)
    if St.shape != (cb.m1, cb.m1):
        raise StructureError(f"S_tilde has shape {St.shape}, expected ({cb.m1}, {cb.m1})")
    img = cb.image_R
    St1 = sym_skew_split(St)[0]
    if img.shape[1]:
        lam_st = _restricted_min_eig(St1, img)
        if lam_st < -PD_REL * max(_norm2(St1), 1e-300):
            return ConditionEntry(name, False, lam_st, PD_REL, None,
                                  "S_tilde_1 is not nonnegative on Image(R)")
    T = np.stack([T_matrix(cb, St, w) for w in sph.points])
    H = _skew_SA(sys, S, sph, T)
    basis = kernel_basis(sys.L1, tol).basis if variant == 1 else np.eye(sys.m)
    return _semidef_sweep(name, H, basis, sph, "Ker(L1)" if variant == 1 else "C^m")


def condition_suite(sys, S=None, K=None, sph=None, cb=None, S_tilde=None, tol=KERNEL_TOL):
    """Run every applicable check and collect them in a :class:`ConditionReport`.

    Without ``S`` or ``K`` the corresponding checks are skipped; with a
    constraint block the constrained variants are added.  ``alpha`` is the
    best-margin value of :func:`find_alpha` when it exists.
    """
    sph = _sampling(sys, sph)
    rep = ConditionReport()
    rep.add(validate_condition_A(sys, tol))
    if S is not None:
        rep.add(check_S(sys, S, tol))
        rep.add(check_S1(sys, S, sph, tol))
        rep.add(check_S2(sys, S, sph))
    if K is not None:
        rep.add(check_K(sys, K, sph, tol))
    rep.add(check_R(sys, sph))
    if cb is not None:
        rep.add(check_C(sys, cb, sph))
        if K is not None:
            rep.add(check_Kstar(sys, cb, K, sph, tol))
        if S is not None and S_tilde is not None:
            rep.add(check_Sstar(sys, cb, S, S_tilde, sph, 1, tol))
            rep.add(check_Sstar(sys, cb, S, S_tilde, sph, 2, tol))
    if S is not None and K is not None:
        res = find_alpha(sys, S, K, sph, cb=cb, tol=tol)
        rep.alpha = None if res is None else res.alpha
    return rep
