import numpy as np
import pytest

from hyperdiss import catalog
from hyperdiss.compensator import CompensatorSpec
from hyperdiss.conditions import (
    ConditionReport,
    ConstraintBlock,
    SphereSampling,
    check_C,
    check_K,
    check_Kstar,
    check_R,
    check_S,
    check_S1,
    check_S2,
    check_Sstar,
    condition_suite,
    find_alpha,
    intersect_subspaces,
    min_eig_on_subspace,
    stack_rank,
    subspace_X,
    validate_condition_A,
)
from hyperdiss.system import HyperbolicSystem, StructureError, kernel_basis


def _sys(A0, A, L):
    return HyperbolicSystem(1, len(L), A0, [A], L)


# --------------------------------------------------------------------------
# sampling


def test_sphere_sampling_defaults():
    s1 = SphereSampling.default(1)
    np.testing.assert_array_equal(s1.points, [[1.0], [-1.0]])
    assert s1.exact and s1.refine() is s1
    s2 = SphereSampling.default(2)
    assert s2.count == 256 and s2.scheme == "uniform-angle"
    s3 = SphereSampling.default(3)
    assert s3.count == 512 and s3.scheme == "fibonacci"
    for s in (s2, s3, SphereSampling.default(4)):
        np.testing.assert_allclose(np.linalg.norm(s.points, axis=1), 1.0, atol=1e-12)
        assert np.unique(np.round(s.points, 12), axis=0).shape[0] == s.count


@pytest.mark.parametrize("n,count", [(2, 16), (3, 40), (5, 30)])
def test_refine_is_superset(n, count):
    s = SphereSampling.default(n, count)
    r = s.refine()
    assert r.count > s.count
    for p in s.points:
        assert np.min(np.linalg.norm(r.points - p, axis=1)) < 1e-12


def test_gaussian_directions_follow_seed():
    a = SphereSampling.default(4, 10, seed=1).points
    b = SphereSampling.default(4, 10, seed=1).points
    c = SphereSampling.default(4, 10, seed=2).points
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)


# --------------------------------------------------------------------------
# condition (A)


def test_condition_A_timoshenko(tim2):
    e = validate_condition_A(tim2.sys)
    assert e.passed and "dim Ker(L) = 2" in e.details


def test_condition_A_zero_L_warns():
    e = validate_condition_A(_sys(np.eye(2), np.zeros((2, 2)), np.zeros((2, 2))))
    assert e.passed
    assert "L = 0: no dissipation" in e.warnings


def test_condition_A_indefinite_A0():
    e = validate_condition_A(_sys(np.diag([1.0, -1.0]), np.zeros((2, 2)), np.diag([0.0, 1.0])))
    assert not e.passed and e.margin == -1.0


def test_condition_A_nonsymmetric_flux_and_trivial_kernel():
    e = validate_condition_A(_sys(np.eye(2), np.array([[0.0, 1.0], [0.0, 0.0]]), np.diag([0.0, 1.0])))
    assert not e.passed
    e = validate_condition_A(_sys(np.eye(2), np.zeros((2, 2)), np.eye(2)))
    assert not e.passed and e.margin <= 0


def test_condition_A_negative_L():
    e = validate_condition_A(_sys(np.eye(2), np.zeros((2, 2)), np.diag([0.0, -1.0])))
    assert not e.passed and e.margin == -1.0


# --------------------------------------------------------------------------
# helpers


def test_min_eig_on_subspace(tim2, rng):
    B = kernel_basis(np.zeros((3, 3)))
    assert min_eig_on_subspace(np.eye(3), B) == pytest.approx(1.0)
    with pytest.raises(ValueError, match="vacuous subspace"):
        min_eig_on_subspace(np.eye(3), np.zeros((3, 0)))
    KA = tim2.K.matrix(tim2.sys, [1.0]) @ tim2.sys.A[0]
    assert min_eig_on_subspace(0.5 * (KA + KA.T), kernel_basis(tim2.sys.L)) == pytest.approx(1.0)
    X = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    H = X + X.conj().T
    assert min_eig_on_subspace(H, np.eye(5)) == pytest.approx(np.linalg.eigvalsh(H)[0], abs=1e-12)


def test_stack_rank():
    assert stack_rank([np.eye(3)])[0] == 3
    assert stack_rank([np.zeros((3, 3)), np.zeros((3, 3))])[0] == 0
    assert stack_rank([np.diag([1.0, 0.0]), np.diag([0.0, 2.0])])[0] == 2


# --------------------------------------------------------------------------
# (S), (S)_1, (S)_2


def test_check_S_symmetric_L_with_zero_S(toy):
    assert check_S(toy.sys, np.zeros((2, 2))).passed


def test_check_S_timoshenko(tim2):
    e = check_S(tim2.sys, tim2.S)
    assert e.passed and e.margin > 1e-8


def test_check_S_fails_beyond_bound():
    e = catalog.timoshenko(2.0, 1.0, beta=2 * 4.0 / 5.0)
    r = check_S(e.sys, e.S)
    assert not r.passed and r.margin < 0
    M = 0.5 * (e.S @ e.sys.L + (e.S @ e.sys.L).T) + e.sys.L1
    assert np.linalg.eigvalsh(M)[0] < 0


@pytest.mark.parametrize("a", [0.5, 2.0, 3.0])
def test_check_S1_margin_zero(a):
    e = catalog.timoshenko(a, 1.0)
    r = check_S1(e.sys, e.S)
    assert r.passed and abs(r.margin) < 1e-14
    assert "exact" in r.details


def test_check_S2_timoshenko(tim1, tim2):
    r2 = check_S2(tim2.sys, tim2.S)
    beta = tim2.params["beta"]
    assert not r2.passed
    assert r2.margin == pytest.approx(-beta * (4 - 1) / 2, rel=1e-12)
    r1 = check_S2(tim1.sys, tim1.S)
    assert r1.passed and r1.margin == 0.0


# --------------------------------------------------------------------------
# (K)


def test_check_K_timoshenko(tim2):
    r = check_K(tim2.sys, tim2.K)
    assert r.passed and r.margin == pytest.approx(1.0)


def test_check_K_zero_compensator(tim2):
    r = check_K(tim2.sys, CompensatorSpec.constant(np.zeros((4, 4))))
    assert not r.passed and r.margin == 0.0


def test_check_K_structure_residuals(tim2):
    # symmetric (not skew) K fails the structural clause
    r = check_K(tim2.sys, CompensatorSpec.constant(np.eye(4)))
    assert not r.passed
    # even compensator fails oddness
    r = check_K(tim2.sys, lambda w: np.asarray(catalog.TIMOSHENKO_K))
    assert not r.passed and "oddness residual 2" in r.details


def test_check_K_euler_maxwell_unrestricted_fails(em):
    r = check_K(em.sys, em.K, SphereSampling.default(3, 64))
    assert not r.passed
    w = np.array([0.0, 0.0, 1.0])
    KA = em.K.matrix(em.sys, w) @ np.tensordot(w, em.sys.flux_stack, axes=1)
    phi = np.zeros(10)
    phi[7:10] = w          # B aligned with omega: |Omega_w phi4| = 0
    assert phi @ (0.5 * (KA + KA.T)) @ phi == 0.0


def test_check_K_invariant_under_reflection(em):
    sph = SphereSampling.default(3, 32)
    Kfake = CompensatorSpec.kalman(0.5, m=4)
    toy4 = catalog.timoshenko(2.0, 1.0)
    a = check_K(toy4.sys, Kfake, SphereSampling.from_points([[1.0]]))
    b = check_K(toy4.sys, Kfake, SphereSampling.from_points([[-1.0]]))
    assert a.margin == pytest.approx(b.margin, rel=1e-12)
    a = check_Kstar(em.sys, em.cb, em.K, sph)
    b = check_Kstar(em.sys, em.cb, em.K, SphereSampling.from_points(-sph.points))
    assert a.margin == pytest.approx(b.margin, rel=1e-12)


def test_failures_persist_under_refinement(em):
    s = SphereSampling.default(3, 20)
    assert not check_K(em.sys, em.K, s).passed
    assert not check_K(em.sys, em.K, s.refine()).passed
    assert not check_S2(em.sys, em.S, s.refine()).passed


# --------------------------------------------------------------------------
# alpha


def test_find_alpha_timoshenko(tim2):
    res = find_alpha(tim2.sys, tim2.S, tim2.K)
    assert res is not None and 0 < res.alpha <= res.alpha_max <= 1 and res.margin > 0


def test_find_alpha_scaling(tim2):
    res1 = find_alpha(tim2.sys, tim2.S, tim2.K)
    res2 = find_alpha(tim2.sys, tim2.S, CompensatorSpec.constant(2 * catalog.TIMOSHENKO_K))
    # the threshold scales with |(K A)_1|, so agreement is up to the bisection tolerance
    assert res2.alpha_max >= 0.5 * res1.alpha_max * (1 - 1e-7)
    assert res2.alpha == pytest.approx(0.5 * res1.alpha, rel=1e-6)


def test_find_alpha_remark1_toy(toy):
    margin_K = check_K(toy.sys, toy.K).margin
    res = find_alpha(toy.sys, None, toy.K)
    assert (margin_K > 0) == (res is not None)


def test_find_alpha_fails_without_K_positivity(tim2):
    assert find_alpha(tim2.sys, tim2.S, CompensatorSpec.constant(np.zeros((4, 4)))) is None


# --------------------------------------------------------------------------
# (R)


def test_check_R(tim2):
    r = check_R(tim2.sys)
    assert r.passed and "min rank 4" in r.details
    r = check_R(_sys(np.eye(2), np.array([[0.0, 1.0], [1.0, 0.0]]), np.zeros((2, 2))))
    assert not r.passed and "min rank 0" in r.details


def test_check_R_fails_with_decoupled_transport(tim2):
    A = np.zeros((5, 5))
    A[:4, :4] = tim2.sys.A[0]
    A[4, 4] = 1.0
    L = np.zeros((5, 5))
    L[:4, :4] = tim2.sys.L
    r = check_R(_sys(np.eye(5), A, L))
    assert not r.passed
    assert np.linalg.svd(np.vstack([L @ np.linalg.matrix_power(A, k) for k in range(5)]),
                         compute_uv=False)[-1] == 0.0


# --------------------------------------------------------------------------
# constraints


def test_constraint_block_projectors(em):
    cb = em.cb
    np.testing.assert_allclose(cb.Pi1 + cb.Pi2, np.eye(2))
    np.testing.assert_allclose(cb.Pi1 @ cb.R, cb.R)
    for P in (cb.Pi1, cb.Pi2):
        np.testing.assert_allclose(P @ P, P, atol=1e-14)
        np.testing.assert_allclose(P, P.T)
    with pytest.raises(StructureError):
        ConstraintBlock(2, (np.zeros((2, 3)),), np.zeros((1, 3)))


def test_check_C_euler_maxwell(em):
    r = check_C(em.sys, em.cb)
    assert r.passed and r.margin > 0 and "conserved" in r.details


def test_check_C_trivial(tim2):
    assert check_C(tim2.sys, ConstraintBlock.trivial(1, 4)).passed


def test_check_C_broken(em):
    R = em.cb.R.copy()
    R[0, 0] = 2.0
    r = check_C(em.sys, ConstraintBlock(2, em.cb.Q, R))
    assert not r.passed and "Q A0^-1 L + R A0^-1 A" in r.details
    R = em.cb.R.copy()
    R[0, 1] = 1.0  # couple the constraint to the velocity
    r = check_C(em.sys, ConstraintBlock(2, em.cb.Q, R))
    assert not r.passed and r.margin < 0


def test_subspace_X(em, rng):
    for _ in range(5):
        w = rng.standard_normal(3)
        w /= np.linalg.norm(w)
        X = subspace_X(em.cb, w)
        assert X.dim == 9
        np.testing.assert_allclose(w @ X.basis[7:10], 0, atol=1e-12)
    triv = ConstraintBlock.trivial(3, 10)
    assert subspace_X(triv, [1.0, 0.0, 0.0]).dim == 10
    cb = ConstraintBlock(2, (np.eye(2, 5),), np.zeros((2, 5)))
    assert np.allclose(cb.Pi2, np.eye(2))
    assert subspace_X(cb, [1.0]).dim == 3


def test_intersection(em):
    w = np.array([0.0, 0.0, 1.0])
    I = intersect_subspaces(subspace_X(em.cb, w), kernel_basis(em.sys.L))
    assert I.dim == 3  # e1 and the two B directions orthogonal to omega


def test_check_Kstar(em):
    r = check_Kstar(em.sys, em.cb, em.K)
    assert r.passed and r.margin == pytest.approx(min(1.0, 1.0), rel=1e-9)


def test_check_Kstar_without_block_is_check_K(tim2):
    a, b = check_Kstar(tim2.sys, None, tim2.K), check_K(tim2.sys, tim2.K)
    assert a.passed == b.passed and a.margin == b.margin


def test_check_Kstar_broken(em):
    base = em.K

    def K(w):
        M = base.matrix(em.sys, w).copy()
        M[0, 1:4] = 0.0
        M[1:4, 0] = 0.0
        return M

    r = check_Kstar(em.sys, em.cb, K, SphereSampling.default(3, 32))
    assert not r.passed


def test_check_Sstar(em):
    assert check_Sstar(em.sys, em.cb, em.S, em.S_tilde, variant=1).passed
    r2 = check_Sstar(em.sys, em.cb, em.S, em.S_tilde, variant=2)
    assert not r2.passed and r2.margin < 0
    with pytest.raises(ValueError):
        check_Sstar(em.sys, em.cb, em.S, em.S_tilde, variant=3)


def test_check_Sstar_zero_tilde_reduces(tim2):
    cb = ConstraintBlock.trivial(1, 4)
    for v, ref in ((1, check_S1), (2, check_S2)):
        a = check_Sstar(tim2.sys, cb, tim2.S, np.zeros((1, 1)), variant=v)
        b = ref(tim2.sys, tim2.S)
        assert a.passed == b.passed and a.margin == pytest.approx(b.margin)


def test_report_serialisation(tim2):
    rep = condition_suite(tim2.sys, tim2.S, tim2.K)
    d = rep.to_dict()
    assert set(d) == {"conditions", "alpha"}
    assert set(d["conditions"]) == {"A", "S", "S1", "S2", "K", "R"}
    for v in d["conditions"].values():
        assert {"passed", "margin", "worst_omega", "tol", "details"} <= set(v)
    assert isinstance(rep, ConditionReport) and rep.passed(["A", "S", "S1", "K", "R"])
