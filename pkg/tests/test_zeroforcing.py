import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_complex
from simbf.errors import SingularChannelError, StructuralError
from simbf.rate import sinr, sum_rate
from simbf.zeroforcing import zf_beamformer, zf_solution, zf_waterfill


def test_orthonormal_rows_give_conjugate_transpose():
    rows = np.linalg.qr(random_complex(np.random.default_rng(0), 6, 6))[0][:3]
    G, d = zf_beamformer(rows)
    assert np.allclose(G, rows.conj().T)
    assert np.allclose(d, 1.0)


def test_random_instance_is_diagonal_with_unit_columns():
    H = random_complex(np.random.default_rng(1), 2, 8)
    G, d = zf_beamformer(H)
    C = H @ G
    assert np.allclose(np.diag(C), d, rtol=1e-12)
    off = C - np.diag(np.diag(C))
    assert np.linalg.norm(off) < 1e-9 * np.linalg.norm(H) * np.linalg.norm(G)
    assert np.all(np.abs(np.linalg.norm(G, axis=0) - 1) < 1e-9)
    assert np.all(d > 0)


@given(st.floats(0.01, 100.0), st.integers(0, 2))
def test_row_scaling_scales_normalisation(c, i):
    rows = np.linalg.qr(random_complex(np.random.default_rng(2), 5, 5))[0][:3]
    scaled = rows.copy()
    scaled[i] *= c
    _, d = zf_beamformer(scaled)
    expected = np.ones(3)
    expected[i] = c
    assert np.allclose(d, expected, rtol=1e-9)


def test_zero_interference_invariant():
    rng = np.random.default_rng(3)
    for _ in range(50):
        n, q = int(rng.integers(1, 6)), int(rng.integers(6, 20))
        H = random_complex(rng, n, q)
        G, d = zf_beamformer(H)
        C = np.abs(H @ G)
        for i in range(n):
            for j in range(n):
                if i != j:
                    assert C[i, j] < 1e-9 * np.linalg.norm(H[i])
        assert np.all(np.abs(np.linalg.norm(G, axis=0) - 1) < 1e-9)


def test_rank_deficient_channel_names_pivot():
    h = random_complex(np.random.default_rng(4), 3, 6)
    H = np.vstack([h[0], h[1], h[0] * 2j])
    with pytest.raises(SingularChannelError) as info:
        zf_beamformer(H)
    assert info.value.pivot == 2


def test_condition_cap():
    H = np.array([[1.0, 0.0, 0.0], [1.0, 1e-5, 0.0]], dtype=complex)
    with pytest.raises(SingularChannelError):
        zf_beamformer(H, cond_cap=1e6)
    G, _ = zf_beamformer(H, cond_cap=1e12)
    assert np.allclose(np.linalg.norm(G, axis=0), 1.0)


def test_more_users_than_atoms():
    with pytest.raises(StructuralError):
        zf_beamformer(np.ones((3, 2)))


def test_waterfill_equal_gains_uniform():
    P, mu = zf_waterfill(np.ones(4), np.ones(4), 0.1, 2.0)
    assert np.allclose(P, 0.5)
    assert 1 / mu == pytest.approx(0.6)


def test_waterfill_two_channel_hand_case():
    # thresholds noise / (rho d^2) = 1 and 4, budget 1 -> level 2, powers (1, 0)
    P, mu = zf_waterfill([1.0, 0.5], [1.0, 1.0], 1.0, 1.0)
    assert np.allclose(P, [1.0, 0.0])
    assert mu == pytest.approx(0.5)


def test_waterfill_dominated_channel_and_empty_budget():
    P, _ = zf_waterfill([1.0, 1e-9], [1.0, 1.0], 1.0, 1.0)
    assert P[1] == 0.0
    P, mu = zf_waterfill([1.0, 1.0], [1.0, 1.0], 1.0, 0.0)
    assert np.all(P == 0.0) and np.isnan(mu)


@given(st.lists(st.floats(0.05, 20.0), min_size=1, max_size=8), st.floats(1e-3, 100.0))
def test_waterfill_kkt(d, budget):
    d = np.array(d)
    rho = np.linspace(0.5, 1.5, d.size)
    P, mu = zf_waterfill(d, rho, 0.3, budget)
    thresholds = 0.3 / (rho * d**2)
    assert abs(P.sum() - budget) <= 1e-9 * budget
    active = P > 0
    assert np.allclose(P[active] + thresholds[active], 1 / mu, rtol=1e-9)
    assert np.all(thresholds[~active] >= (1 / mu) * (1 - 1e-9))


def test_solution_rate_matches_general_sinr():
    rng = np.random.default_rng(5)
    H = random_complex(rng, 4, 49)
    rho = rng.uniform(1e-10, 4e-10, 4)
    sol = zf_solution(H, rho, 3.98e-14, 0.0316)
    general = sum_rate(sinr(H, rho, sol.beams, sol.powers, 3.98e-14))
    assert sol.rate == pytest.approx(general, rel=1e-9)
    assert sol.is_feasible()
