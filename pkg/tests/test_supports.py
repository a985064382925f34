from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radarcs.config import DopplerMode, GridIndex, RadarConfig, from_linear_index
from radarcs.supports import (
    ParameterError,
    SupportSet,
    TargetScene,
    balancedness,
    make_scene,
    sample_balanced_support,
    sample_most_balanced_support,
    sample_unconstrained_support,
    threshold_amplitude,
)

CFG = RadarConfig(2, 8, 8, DopplerMode.DOPPLER_FREE)


def _support_from_linear(cfg, linear):
    return SupportSet(tuple(from_linear_index(cfg, k) for k in linear))


def test_balancedness_extremes():
    # All targets in one class -> eta = N_R.
    one_class = SupportSet(tuple(GridIndex(8, t, CFG.fixed_doppler) for t in range(1, 5)))
    assert balancedness(CFG, one_class).eta == Fraction(8)
    # One target per class -> eta = 1.
    spread = SupportSet(tuple(GridIndex(b, 1, CFG.fixed_doppler) for b in range(1, 9)))
    assert balancedness(CFG, spread).eta == Fraction(1)


def test_balancedness_worked_example():
    # N_R = 8, class sizes (2,2,0,...,0), s = 4 -> eta = 4.
    support = SupportSet(
        (
            GridIndex(1, 1, CFG.fixed_doppler),
            GridIndex(9, 1, CFG.fixed_doppler),
            GridIndex(2, 1, CFG.fixed_doppler),
            GridIndex(10, 1, CFG.fixed_doppler),
        )
    )
    report = balancedness(CFG, support)
    assert report.eta == Fraction(4)
    assert sorted(report.class_sizes, reverse=True)[:2] == [2, 2]


def test_balancedness_empty_rejected():
    with pytest.raises(ParameterError):
        balancedness(CFG, SupportSet(()))


def test_duplicate_indices_rejected():
    theta = GridIndex(1, 1, CFG.fixed_doppler)
    with pytest.raises(ValueError):
        SupportSet((theta, theta))


@pytest.mark.parametrize("eta", [1, 2, 4, 8])
def test_balanced_sampler_hits_eta_exactly(eta):
    for seed in range(50):
        support = sample_balanced_support(CFG, 8, eta, seed)
        support.validate(CFG)
        assert balancedness(CFG, support).eta == Fraction(eta)
        assert len(support) == 8


def test_balanced_sampler_eta_nr_single_class():
    support = sample_balanced_support(CFG, 4, 8, seed=3)
    classes = {t.angle_class(CFG) for t in support}
    assert len(classes) == 1


def test_balanced_sampler_infeasibility():
    with pytest.raises(ParameterError):
        sample_balanced_support(CFG, 6, 1, 0)  # 6 not divisible by 8
    with pytest.raises(ParameterError):
        sample_balanced_support(CFG, 8, 3, 0)  # 3 does not divide N_R
    with pytest.raises(ParameterError):
        sample_balanced_support(CFG, 8, 0, 0)
    tiny = RadarConfig(1, 2, 2, DopplerMode.DOPPLER_FREE)
    with pytest.raises(ParameterError):
        sample_balanced_support(tiny, 6, 2, 0)  # class capacity is 2 < 3


def test_most_balanced_sampler():
    support = sample_most_balanced_support(CFG, 11, 5)
    report = balancedness(CFG, support)
    assert report.eta == Fraction(8 * 2, 11)
    assert max(report.class_sizes) - min(report.class_sizes) <= 1
    exact = sample_most_balanced_support(CFG, 16, 5)
    assert balancedness(CFG, exact).eta == Fraction(1)


def test_unconstrained_sampler_bounds():
    with pytest.raises(ParameterError):
        sample_unconstrained_support(CFG, CFG.grid_size + 1, 0)
    full = sample_unconstrained_support(CFG, CFG.grid_size, 0)
    assert len(full) == CFG.grid_size
    for seed in range(20):
        support = sample_unconstrained_support(CFG, 16, seed)
        eta = balancedness(CFG, support).eta
        assert 1 <= eta <= CFG.n_receive


def test_unconstrained_sampler_uniform_over_classes():
    # Chi-square over the angle coordinate of single-index draws.
    counts = np.zeros(CFG.n_receive)
    draws = 10_000
    for seed in range(draws):
        (theta,) = sample_unconstrained_support(CFG, 1, seed).indices
        counts[theta.angle_class(CFG)] += 1
    expected = draws / CFG.n_receive
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    # 99% quantile of chi-square with 7 degrees of freedom is ~18.48.
    assert chi2 < 18.48


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(min_value=0, max_value=CFG.grid_size - 1),
                min_size=1, max_size=24, unique=True))
def test_class_partition_property(linear):
    support = _support_from_linear(CFG, linear)
    parts = support.class_partition(CFG)
    assert set(parts.keys()) == set(range(CFG.n_receive))
    combined = [t for group in parts.values() for t in group]
    assert sorted(combined) == sorted(support.indices)
    report = balancedness(CFG, support)
    assert 1 <= report.eta <= CFG.n_receive
    assert report.eta * len(support) <= CFG.grid_size


def test_scene_constant_magnitude_and_phases():
    support = sample_unconstrained_support(CFG, 32, 3)
    scene = make_scene(CFG, support, 2.5, 7)
    assert np.allclose(np.abs(scene.coefficients), 2.5, atol=1e-14)
    other = make_scene(CFG, support, 2.5, 8)
    assert not np.allclose(scene.coefficients, other.coefficients)
    again = make_scene(CFG, support, 2.5, 7)
    assert np.array_equal(scene.coefficients, again.coefficients)


def test_scene_phase_uniformity():
    support = sample_unconstrained_support(CFG, 64, 1)
    phases = np.concatenate(
        [np.angle(make_scene(CFG, support, 1.0, seed).coefficients) for seed in range(50)]
    )
    hist, _ = np.histogram(phases, bins=8, range=(-np.pi, np.pi))
    expected = phases.size / 8
    chi2 = float(((hist - expected) ** 2 / expected).sum())
    assert chi2 < 18.48


def test_scene_to_dense_roundtrip():
    support = sample_unconstrained_support(CFG, 5, 9)
    scene = make_scene(CFG, support, 1.0, 0)
    x = scene.to_dense(CFG)
    assert np.count_nonzero(x) == 5
    lin = support.linear_indices(CFG)
    assert np.allclose(x[lin], scene.coefficients)


def test_scene_validation():
    support = sample_unconstrained_support(CFG, 2, 0)
    with pytest.raises(ValueError):
        TargetScene(support=support, coefficients=np.array([1.0 + 0j]))
    with pytest.raises(ValueError):
        TargetScene(support=support, coefficients=np.array([1.0 + 0j, 0.0 + 0j]))
    with pytest.raises(ParameterError):
        make_scene(CFG, support, 0.0, 0)


def test_threshold_amplitude_value():
    # 8*sigma/sqrt(N_T N_R N_t) * sqrt(2 ln N) at the 8x8x64 Doppler-free setup.
    cfg = RadarConfig(8, 8, 64, DopplerMode.DOPPLER_FREE)
    value = threshold_amplitude(cfg, 1.0)
    expected = 8.0 / np.sqrt(4096.0) * np.sqrt(2.0 * np.log(4096.0))
    assert np.isclose(value, expected, rtol=1e-12)
    assert np.isclose(value, 0.50984, atol=5e-6)
    assert np.isclose(threshold_amplitude(cfg, 2.0), 2 * value, rtol=1e-12)
