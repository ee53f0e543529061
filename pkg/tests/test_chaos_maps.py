import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from csk_lab.chaos_maps import (
    MapKind,
    MapTag,
    cpf_iterate,
    fixed_points,
    generate_sequence,
    generate_sequences,
    pwl_iterate,
    raw_orbit,
    raw_orbits,
    sequence_stats,
)

CPF = MapKind.cpf()
PWL = MapKind.pwl()


@pytest.mark.parametrize("x, expected", [(0.0, 1.0), (1.0, -1.0), (0.6, 0.28)])
def test_cpf_values(x, expected):
    assert cpf_iterate(x) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("x, expected", [(0.5, 0.2), (-0.5, -0.2), (0.2, 0.4), (0.0, -0.8)])
def test_pwl_values(x, expected):
    assert pwl_iterate(x, 3, 0.1) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("f", [cpf_iterate, pwl_iterate])
def test_iterate_rejects_outside_unit_interval(f):
    with pytest.raises(ValueError):
        f(1.5)


def test_pwl_parameters_validated():
    with pytest.raises(ValueError):
        MapKind.pwl(L=0)
    with pytest.raises(ValueError):
        MapKind.pwl(phi=1.0)
    assert MapKind.from_name("PWL").tag is MapTag.PWL
    with pytest.raises(ValueError):
        MapKind.from_name("logistic")


@pytest.mark.parametrize("kind", [CPF, PWL, MapKind.pwl(5, 0.37)])
def test_fixed_points_are_fixed(kind):
    step = cpf_iterate if kind.tag is MapTag.CPF else (
        lambda x: pwl_iterate(x, kind.pwl_L, kind.pwl_phi))
    pts = fixed_points(kind)
    assert pts
    for p in pts:
        assert step(p) == pytest.approx(p, abs=1e-12)


def test_fixed_point_seed_rejected():
    with pytest.raises(ValueError):
        generate_sequence(CPF, 0.5, 100)
    with pytest.raises(ValueError):
        generate_sequence(PWL, 0.16, 100)
    with pytest.raises(ValueError):
        generate_sequence(CPF, 1.0, 100)


@pytest.mark.parametrize("kind", [CPF, PWL])
def test_normalized_statistics(kind):
    seq = generate_sequence(kind, 0.3, 100_000)
    mean, var = sequence_stats(seq)
    assert abs(mean) < 0.02
    assert abs(var - 1) < 0.05
    assert seq.normalized and len(seq) == 100_000


def test_sequence_stats_examples():
    assert sequence_stats([1.0, -1.0]) == (0.0, 1.0)
    assert sequence_stats([0.5]) == (0.5, 0.0)
    with pytest.raises(ValueError):
        sequence_stats([])


def test_chips_read_only():
    seq = generate_sequence(CPF, 0.3, 10)
    with pytest.raises(ValueError):
        seq.chips[0] = 0.0


@pytest.mark.parametrize("kind", [CPF, PWL])
def test_batch_matches_scalar(kind):
    seeds = [0.3, -0.71, 0.123456, 0.9]
    batch = generate_sequences(kind, seeds, 5000)
    for row, s in zip(batch, seeds):
        np.testing.assert_array_equal(row, generate_sequence(kind, s, 5000).chips)


def test_orbit_survives_landing_on_fixed_point():
    # cos(pi/3)=0.5 is fixed; -0.5 maps onto it exactly in one step.
    orbit = raw_orbit(CPF, -0.5, 2000, burn_in=0)
    assert np.unique(orbit).size > 1000
    np.testing.assert_array_equal(raw_orbits(CPF, [-0.5], 2000, burn_in=0)[0], orbit)


@settings(max_examples=40, deadline=None)
@given(seed=st.floats(-0.999, 0.999), pwl=st.booleans())
def test_raw_chips_stay_in_unit_interval(seed, pwl):
    kind = PWL if pwl else CPF
    if any(abs(seed - p) < 1e-6 for p in fixed_points(kind)):
        return
    orbit = raw_orbit(kind, seed, 2000, burn_in=10)
    assert np.all(np.abs(orbit) <= 1.0)
