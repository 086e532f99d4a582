import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_complex, small_system
from simbf.errors import ConfigurationError, DomainError, StructuralError
from simbf.geometry import build_layout
from simbf.propagation import (
    LayerKind,
    LayerStack,
    arrange_layers,
    cascade,
    diffraction_matrix,
    partial_products,
    radiated_power,
    radiated_power_bound,
    spectral_norm_sq,
    suffix_products,
    transfer_matrices,
)

LAM = 3e8 / 28e9


def kernel_mp(dx, dy, gap, area, lam):
    """Independent evaluation of one kernel entry at 40 significant digits."""
    with mpmath.workdps(40):
        d = mpmath.sqrt(mpmath.mpf(dx) ** 2 + mpmath.mpf(dy) ** 2 + mpmath.mpf(gap) ** 2)
        cos = mpmath.mpf(gap) / d
        val = mpmath.mpf(area) * cos / d * (1 / (2 * mpmath.pi * d) - 1j / mpmath.mpf(lam)) * mpmath.expj(2 * mpmath.pi * d / lam)
        return complex(val)


def test_coaxial_entry():
    s = 5 * LAM / 12
    A = LAM**2 / 4
    W = diffraction_matrix(np.zeros((1, 3)), np.zeros((1, 3)), s, A, LAM)
    expected = (A / s) * (1 / (2 * math.pi * s) - 1j / LAM) * np.exp(1j * 2 * math.pi * s / LAM)
    assert W[0, 0] == pytest.approx(expected, rel=1e-14)


def test_offset_entries_match_extended_precision():
    rng = np.random.default_rng(0)
    src = np.column_stack([rng.uniform(-0.02, 0.02, (5, 2)), np.zeros(5)])
    dst = np.column_stack([rng.uniform(-0.02, 0.02, (4, 2)), np.zeros(4)])
    gap, area = 0.0041, 2.9e-5
    W = diffraction_matrix(src, dst, gap, area, LAM)
    for q in range(4):
        for n in range(5):
            ref = kernel_mp(dst[q, 0] - src[n, 0], dst[q, 1] - src[n, 1], gap, area, LAM)
            assert abs(W[q, n] - ref) <= 1e-12 * abs(ref)


def test_area_linearity():
    src = np.random.default_rng(1).uniform(-0.01, 0.01, (3, 3))
    dst = np.random.default_rng(2).uniform(-0.01, 0.01, (4, 3))
    W1 = diffraction_matrix(src, dst, 0.004, 1e-5, LAM)
    W2 = diffraction_matrix(src, dst, 0.004, 2e-5, LAM)
    assert np.allclose(np.abs(W2), 2 * np.abs(W1), rtol=1e-14)


def test_zero_gap_is_rejected():
    with pytest.raises(DomainError):
        diffraction_matrix(np.zeros((1, 3)), np.zeros((1, 3)), 0.0, 1e-5, LAM)


def test_far_term_magnitude_decreases_with_offset():
    src = np.zeros((1, 3))
    dst = np.column_stack([np.linspace(0, 0.05, 20), np.zeros(20), np.zeros(20)])
    W = diffraction_matrix(src, dst, 0.004, 1e-5, LAM)
    assert np.all(np.diff(np.abs(W[:, 0])) < 0)


def test_transfer_matrix_shapes_and_shared_layers():
    geo = build_layout(28e9, 4, 5, 3, 4)
    Ws = transfer_matrices(geo)
    assert Ws[0].shape == (12, 4)
    assert all(W.shape == (12, 12) for W in Ws[1:])
    assert len(Ws) == 5


def test_cascade_single_layer_identity():
    geo = build_layout(28e9, 2, 1, 2, 2)
    Ws = transfer_matrices(geo)
    assert np.allclose(cascade(Ws, np.ones((1, 4))), Ws[0], rtol=0, atol=0)


def test_cascade_identity_stack_is_plain_product():
    geo = build_layout(28e9, 3, 4, 3, 3)
    Ws = transfer_matrices(geo)
    G = cascade(Ws, np.ones((4, 9)))
    ref = Ws[3] @ Ws[2] @ Ws[1] @ Ws[0]
    assert np.linalg.norm(G - ref) <= 1e-13 * np.linalg.norm(ref)


def test_cascade_by_hand_two_by_one():
    W1 = np.array([[1 + 1j], [2.0]])
    W2 = np.array([[0.5, 1j], [1.0, -1.0]])
    g1 = np.array([1j, 2.0])
    g2 = np.array([3.0, -1j])
    # layer 1 output: [1j*(1+1j), 2*2] = [-1+1j, 4]
    # W2 @ that: [0.5*(-1+1j) + 4j, (-1+1j) - 4] = [-0.5+4.5j, -5+1j]
    # layer 2: [3*(-0.5+4.5j), -1j*(-5+1j)] = [-1.5+13.5j, 1+5j]
    G = cascade([W1, W2], np.array([g1, g2]))
    assert np.allclose(G[:, 0], [-1.5 + 13.5j, 1 + 5j])


@given(st.complex_numbers(min_magnitude=0.1, max_magnitude=10, allow_nan=False, allow_infinity=False), st.integers(0, 2))
def test_cascade_scales_with_one_layer(c, ell):
    rng = np.random.default_rng(5)
    Ws = [random_complex(rng, 4, 2), random_complex(rng, 4, 4), random_complex(rng, 4, 4)]
    coeffs = random_complex(rng, 3, 4)
    scaled = coeffs.copy()
    scaled[ell] *= c
    assert np.allclose(cascade(Ws, scaled), c * cascade(Ws, coeffs), rtol=1e-12, atol=0)


def test_cascade_rejects_bad_chain():
    with pytest.raises(StructuralError):
        cascade([np.ones((3, 2)), np.ones((4, 4))], np.ones((2, 3)))
    with pytest.raises(StructuralError):
        cascade([np.ones((3, 2))], np.ones((2, 3)))


def test_partial_products_reconstruct_every_layer(rng):
    _, Ws, stack = small_system(rng, n=2, layers=5, qx=3, qy=2, n_ac=2)
    G = cascade(Ws, stack)
    Es = suffix_products(Ws, stack)
    for ell in range(5):
        E, B = partial_products(Ws, stack, ell)
        rebuilt = E @ (stack.layer(ell)[:, None] * B)
        assert np.linalg.norm(rebuilt - G) <= 1e-12 * np.linalg.norm(G)
        assert np.allclose(E, Es[ell], rtol=1e-12, atol=0)


def test_partial_products_boundaries(rng):
    _, Ws, stack = small_system(rng, layers=3)
    E, B = partial_products(Ws, stack, 2)
    assert np.array_equal(E, np.eye(6))
    ref = Ws[2] @ (stack.layer(1)[:, None] * (Ws[1] @ (stack.layer(0)[:, None] * Ws[0])))
    assert np.allclose(B, ref, rtol=1e-13)
    _, B0 = partial_products(Ws, stack, 0)
    assert np.array_equal(B0, Ws[0])
    with pytest.raises(StructuralError):
        partial_products(Ws, stack, 3)


def test_radiated_power_examples():
    G = np.linalg.qr(random_complex(np.random.default_rng(0), 5, 3))[0]
    assert radiated_power(G, [1.0, 2.0, 3.0]) == pytest.approx(6.0)
    g = np.array([[1.0], [1.0j]])
    assert radiated_power(g, [3.0]) == pytest.approx(6.0)


def test_radiated_power_matches_double_sum():
    rng = np.random.default_rng(7)
    G = random_complex(rng, 4, 3)
    P = rng.uniform(0, 1, 3)
    total = 0.0
    for i in range(3):
        for q in range(4):
            total += P[i] * (G[q, i].real ** 2 + G[q, i].imag ** 2)
    assert radiated_power(G, P) == pytest.approx(total, rel=1e-14)


def test_spectral_norm_two_by_two_by_hand():
    W = np.array([[2.0, 1.0], [0.0, 1.0]])
    # W^H W = [[4, 2], [2, 2]], eigenvalues 3 +- sqrt(5)
    assert spectral_norm_sq(W) == pytest.approx(3 + math.sqrt(5), rel=1e-9)


def test_spectral_norm_matches_svd():
    W = random_complex(np.random.default_rng(8), 6, 4)
    assert spectral_norm_sq(W) == pytest.approx(np.linalg.norm(W, 2) ** 2, rel=1e-8)


def test_bound_without_ac_layers_has_unit_amplitude_factor():
    geo = build_layout(28e9, 2, 3, 2, 2)
    Ws = transfer_matrices(geo)
    stack = LayerStack.initial(arrange_layers("pc-only", 3, 0), 4, np.random.default_rng(0))
    betas = np.prod([np.linalg.norm(W, 2) ** 2 for W in Ws])
    assert radiated_power_bound(Ws, stack, [1.0, 2.0]) == pytest.approx(3.0 * betas, rel=1e-8)


def test_radiated_power_never_exceeds_bound():
    rng = np.random.default_rng(9)
    for k in range(100):
        arrangement = ("rf-ac-pc", "interlaced", "rf-pc-ac", "pc-only")[k % 4]
        _, Ws, stack = small_system(rng, n=2, layers=4, qx=3, qy=3, arrangement=arrangement, n_ac=2)
        if stack.ac_layers:
            for ell in stack.ac_layers:
                stack.set_amplitudes(ell, rng.uniform(stack.amp_min, stack.amp_max, 9))
        P = rng.uniform(0, 1, 2)
        assert radiated_power(cascade(Ws, stack), P) <= radiated_power_bound(Ws, stack, P)


@pytest.mark.parametrize(
    "arrangement,expected",
    [
        ("rf-ac-pc", "AAPPP"),
        ("rf-pc-ac", "PPPAA"),
        ("interlaced", "APAPP"),
    ],
)
def test_arrangements(arrangement, expected):
    kinds = arrange_layers(arrangement, 3, 2)
    assert "".join("A" if k is LayerKind.AC else "P" for k in kinds) == expected


def test_interlaced_default_spreads_ac_layers():
    kinds = arrange_layers("interlaced", 8, 4)
    assert [i for i, k in enumerate(kinds) if k is LayerKind.AC] == [0, 3, 6, 9]


def test_unknown_arrangement():
    with pytest.raises(ConfigurationError):
        arrange_layers("ac-sandwich", 2, 2)


@given(
    st.lists(st.floats(-50, 50), min_size=6, max_size=6),
    st.lists(st.floats(0, 100), min_size=6, max_size=6),
)
def test_stack_invariants_after_updates(phases, amps):
    stack = LayerStack.initial(arrange_layers("rf-ac-pc", 1, 1), 6, np.random.default_rng(0))
    stack.set_amplitudes(0, amps)
    stack.set_phases(1, phases)
    g = stack.coefficients
    assert np.allclose(np.abs(g[1]), stack.pc_amplitude, rtol=1e-15)
    assert np.all(np.abs(g[0]) >= stack.amp_min * (1 - 1e-15))
    assert np.all(np.abs(g[0]) <= stack.amp_max * (1 + 1e-15))
    assert np.all((stack.phases[1] >= 0) & (stack.phases[1] < 2 * math.pi))
    assert np.allclose(np.angle(g[0]), 0.0)


def test_layer_kind_guards():
    stack = LayerStack.initial(arrange_layers("rf-ac-pc", 1, 1), 3)
    with pytest.raises(StructuralError):
        stack.set_phases(0, [0, 0, 0])
    with pytest.raises(StructuralError):
        stack.set_amplitudes(1, [1, 1, 1])


def test_amplitude_box_defaults():
    stack = LayerStack.initial(arrange_layers("rf-ac-pc", 1, 1), 3)
    assert stack.amp_min == pytest.approx(0.07943, rel=1e-4)
    assert stack.amp_max == pytest.approx(4.4668, rel=1e-4)
