import logging
import math

import numpy as np
import pytest

from simbf.channel import db_to_linear, dbm_to_watts, noise_variance, path_loss, reduce, sample_user_channels
from simbf.errors import StructuralError

LAM = 3e8 / 28e9


def test_unit_variance_entries():
    H = sample_user_channels(np.random.default_rng(0), 100, 1000)
    assert np.mean(np.abs(H) ** 2) == pytest.approx(1.0, rel=0.02)
    assert np.var(H.real) == pytest.approx(0.5, rel=0.02)
    assert np.var(H.imag) == pytest.approx(0.5, rel=0.02)


def test_mean_row_energy_equals_atom_count():
    H = sample_user_channels(np.random.default_rng(1), 10_000, 49)
    assert np.mean(np.sum(np.abs(H) ** 2, axis=1)) == pytest.approx(49, rel=0.02)


def test_fixed_seed_is_bit_identical():
    a = sample_user_channels(np.random.default_rng(42), 8, 49)
    b = sample_user_channels(np.random.default_rng(42), 8, 49)
    assert a.tobytes() == b.tobytes()


def test_smaller_pool_is_prefix():
    a = sample_user_channels(np.random.default_rng(3), 8, 16)
    b = sample_user_channels(np.random.default_rng(3), 5, 16)
    assert np.array_equal(a[:5], b)


def test_path_loss_at_reference_distance():
    assert path_loss(1.0, LAM) == pytest.approx(LAM**2 / (4 * math.pi) ** 2)


def test_path_loss_decade_scales_by_exponent():
    assert path_loss(10.0, LAM) / path_loss(1.0, LAM) == pytest.approx(10**-3.5)


def test_path_loss_hand_value():
    # lambda = 0.0107142857 m, lambda^2 / (4 pi)^2 = 7.2700e-7, (1/14.14)^3.5 = 9.466e-5
    assert path_loss(14.14, LAM) == pytest.approx(7.2700e-7 * 14.14**-3.5, rel=1e-4)
    assert path_loss(14.14, LAM) == pytest.approx(6.882e-11, rel=1e-3)


def test_path_loss_below_reference_warns(caplog):
    with caplog.at_level(logging.WARNING):
        value = path_loss(0.5, LAM)
    assert value > path_loss(1.0, LAM)
    assert "reference" in caplog.text


def test_noise_variance_values():
    assert noise_variance(-174, 10e6) == pytest.approx(3.981e-14, rel=1e-3)
    assert 10 * math.log10(noise_variance(-174, 10e6) * 1e3) == pytest.approx(-104.0)
    assert noise_variance(0.0, 1.0) == pytest.approx(1e-3)
    assert noise_variance(-174, 20e6) == pytest.approx(2 * noise_variance(-174, 10e6))


def test_db_helpers():
    assert db_to_linear(-22, amplitude=True) == pytest.approx(0.07943, rel=1e-4)
    assert db_to_linear(13, amplitude=True) == pytest.approx(4.4668, rel=1e-4)
    assert db_to_linear(10) == pytest.approx(10.0)
    assert dbm_to_watts(15) == pytest.approx(0.031623, rel=1e-4)


def test_reduce_selection_and_round_trip():
    rng = np.random.default_rng(0)
    H = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
    rho = rng.uniform(size=5)
    Hs, rs = reduce(H, rho, [3, 1])
    assert np.array_equal(Hs[0], H[3]) and np.array_equal(Hs[1], H[1])
    assert rs.tolist() == [rho[3], rho[1]]
    full, rfull = reduce(H, rho, range(5))
    assert np.array_equal(full, H) and np.array_equal(rfull, rho)
    back = np.zeros_like(H)
    back[[3, 1]] = Hs
    assert np.array_equal(back[[3, 1]], H[[3, 1]])


@pytest.mark.parametrize("subset", [[0, 0], [5], [-1]])
def test_reduce_rejects_bad_subsets(subset):
    with pytest.raises(StructuralError):
        reduce(np.ones((5, 2)), np.ones(5), subset)
