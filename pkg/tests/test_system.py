import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from hyperdiss.system import (
    Frequency,
    HyperbolicSystem,
    StructureError,
    as_direction,
    assemble_A,
    eta_envelope,
    generator,
    generator_batch,
    kernel_basis,
    orthogonal_complement,
    rho_envelope,
    sym_skew_split,
)

import literals as lit


def test_system_is_read_only_copy():
    A0 = np.eye(2)
    sys = HyperbolicSystem(1, 2, A0, [np.zeros((2, 2))], np.zeros((2, 2)))
    A0[0, 0] = 5.0
    assert sys.A0[0, 0] == 1.0
    with pytest.raises(ValueError):
        sys.A0[0, 0] = 3.0


@pytest.mark.parametrize("kwargs", [
    dict(n=1, m=2, A0=np.eye(3), A=[np.eye(2)], L=np.eye(2)),
    dict(n=2, m=2, A0=np.eye(2), A=[np.eye(2)], L=np.eye(2)),
    dict(n=1, m=2, A0=np.eye(2), A=[np.eye(2)], L=np.full((2, 2), np.nan)),
    dict(n=0, m=2, A0=np.eye(2), A=[], L=np.eye(2)),
])
def test_structure_errors(kwargs):
    with pytest.raises(StructureError):
        HyperbolicSystem(**kwargs)


def test_singular_A0_is_structural_on_use():
    sys = HyperbolicSystem(1, 2, np.diag([1.0, -1.0]), [np.zeros((2, 2))], np.zeros((2, 2)))
    with pytest.raises(StructureError):
        sys.A0_inv


def test_frequency_and_envelopes():
    f = Frequency([3.0, 4.0])
    assert f.s == 5.0
    np.testing.assert_allclose(f.omega, [0.6, 0.8])
    assert f.rho == 25 / 26 and f.eta == 25 / 26 ** 2
    assert Frequency([0.0, 0.0]).omega is None
    assert rho_envelope(0.0) == 0.0 and eta_envelope(0.0) == 0.0
    g = Frequency.polar(2.0, [0.0, 1.0])
    np.testing.assert_array_equal(g.xi, [0.0, 2.0])


def test_direction_validation():
    as_direction([1.0])
    with pytest.raises(StructureError):
        as_direction([1.0, 1.0])
    with pytest.raises(StructureError):
        as_direction([1.0, 0.0], n=3)


def test_assemble_A_timoshenko_and_oddness(tim2):
    np.testing.assert_array_equal(assemble_A(tim2.sys, [1.0]), lit.tim_A(2.0))
    np.testing.assert_array_equal(assemble_A(tim2.sys, [-1.0]), -lit.tim_A(2.0))


def test_assemble_A_euler_maxwell(em):
    np.testing.assert_array_equal(assemble_A(em.sys, [1.0, 0.0, 0.0]),
                                  lit.em_Axi([1.0, 0.0, 0.0], 1.0))


def test_sym_skew_split_timoshenko_L(tim2):
    L1, L2 = sym_skew_split(tim2.sys.L)
    np.testing.assert_array_equal(L1, lit.tim_L1(1.0))
    np.testing.assert_array_equal(L1 + L2, tim2.sys.L)
    S = np.array([[1.0, 2.0], [2.0, 3.0]])
    assert np.all(sym_skew_split(S)[1] == 0)


@given(arrays(np.float64, (4, 4), elements=st.floats(-1e3, 1e3)))
def test_sym_skew_split_properties(M):
    M1, M2 = sym_skew_split(M)
    np.testing.assert_array_equal(M1, M1.T)
    np.testing.assert_array_equal(M2, -M2.T)
    np.testing.assert_allclose(M1 + M2, M, rtol=0, atol=1e-12 * (1 + np.abs(M).max()))


def test_kernel_basis_timoshenko(tim2):
    B = kernel_basis(tim2.sys.L)
    assert B.dim == 2
    P = B.projector
    np.testing.assert_allclose(P, np.diag([0.0, 1.0, 1.0, 0.0]), atol=1e-12)
    np.testing.assert_allclose(B.basis.T @ B.basis, np.eye(2), atol=1e-12)


def test_kernel_basis_edge_cases():
    assert kernel_basis(np.zeros((3, 3))).dim == 3
    assert kernel_basis(np.eye(3)).dim == 0
    assert kernel_basis(np.ones((1, 3))).dim == 2
    with pytest.raises(ValueError):
        kernel_basis(np.eye(2), tol=0.1)
    B = kernel_basis(np.array([[1.0, 1.0, 0.0]]))
    C = orthogonal_complement(B)
    assert C.dim == 1
    np.testing.assert_allclose(np.abs(C.basis.ravel()), [2 ** -0.5, 2 ** -0.5, 0], atol=1e-12)


@given(st.integers(1, 6), st.integers(0, 5), st.integers(0, 2 ** 31 - 1))
def test_kernel_projector_hermitian_idempotent(m, r, seed):
    r = min(r, m)
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((m, r)) @ rng.standard_normal((r, m)) if r else np.zeros((m, m))
    B = kernel_basis(M)
    P = B.projector
    assert B.dim == m - r
    np.testing.assert_allclose(P, P.conj().T, atol=1e-10)
    np.testing.assert_allclose(P @ P, P, atol=1e-10)
    np.testing.assert_allclose(B.basis.conj().T @ B.basis, np.eye(B.dim), atol=1e-10)


def test_generator_at_zero_and_kernel(tim2):
    G = generator(tim2.sys, [0.0])
    np.testing.assert_array_equal(G, -lit.tim_L(1.0))
    ev = np.sort_complex(np.linalg.eigvals(generator(catalog_tim(2.0, 2.0).sys, [0.0])))
    np.testing.assert_allclose(ev, [-1, -1, 0, 0], atol=1e-7)


def catalog_tim(a, g):
    from hyperdiss import catalog
    return catalog.timoshenko(a, g)


def test_generator_batch_matches_pointwise(em, rng):
    s = np.array([0.1, 1.0, 7.0])
    W = rng.standard_normal((4, 3))
    W /= np.linalg.norm(W, axis=1, keepdims=True)
    Gb = generator_batch(em.sys, s, W)
    for i, si in enumerate(s):
        for k, w in enumerate(W):
            np.testing.assert_allclose(Gb[i, k], generator(em.sys, si * w), atol=1e-13)


def test_generator_dimension_mismatch(tim2):
    with pytest.raises(StructureError):
        generator(tim2.sys, [1.0, 0.0])
