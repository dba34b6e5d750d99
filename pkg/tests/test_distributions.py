import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hourglass.distributions import (
    DETERMINISTIC,
    EXPONENTIAL,
    GAMMA,
    DistributionSpec,
    RngHandle,
    deterministic,
    exponential,
    mean_of,
)
from hourglass.errors import ConfigError


def test_exponential_helper():
    d = exponential(2.5)
    assert d.kind == EXPONENTIAL and d.mean == 2.5 and d.shape is None
    assert mean_of(d) == 2.5


def test_mean_must_be_positive_and_finite():
    with pytest.raises(ConfigError):
        exponential(0.0)
    with pytest.raises(ConfigError):
        exponential(-1.0)
    with pytest.raises(ConfigError):
        DistributionSpec(EXPONENTIAL, float("inf"))
    with pytest.raises(ConfigError):
        DistributionSpec("weibull", 1.0)


def test_gamma_shape_validation():
    DistributionSpec(GAMMA, 1.0, 1.0)
    DistributionSpec(GAMMA, 1.0, 7.5)
    with pytest.raises(ConfigError):
        DistributionSpec(GAMMA, 1.0, 0.5)  # unbounded density at 0
    with pytest.raises(ConfigError):
        DistributionSpec(GAMMA, 1.0)
    with pytest.raises(ConfigError):
        DistributionSpec(EXPONENTIAL, 1.0, 2.0)  # shape is gamma-only


def test_deterministic_sampling_consumes_no_draws():
    rng = RngHandle(0)
    d = deterministic(3.25)
    assert d.sample(rng) == 3.25
    assert rng.position == 0


def test_sampling_counts_draws():
    rng = RngHandle(1)
    exponential(1.0).sample(rng)
    assert rng.position == 1
    DistributionSpec(GAMMA, 2.0, 3.0).sample(rng)
    assert rng.position == 2


def test_sample_means_converge():
    rng = RngHandle(7)
    for d, tol in [
        (exponential(2.0), 0.05),
        (DistributionSpec(GAMMA, 2.0, 4.0), 0.03),
        (deterministic(2.0), 0.0),
    ]:
        xs = np.array([d.sample(rng) for _ in range(20000)])
        assert abs(xs.mean() - 2.0) <= 2.0 * tol + 1e-12


def test_scaled_exact():
    assert exponential(1.0).scaled(0.4).mean == 0.4
    g = DistributionSpec(GAMMA, 2.0, 3.0).scaled(0.5)
    assert g.mean == 1.0 and g.shape == 3.0
    assert deterministic(2.0).scaled(2.0) == deterministic(4.0)
    with pytest.raises(ConfigError):
        exponential(1.0).scaled(0.0)


def test_tail_bound_exponential_tight():
    a, alpha = exponential(0.5).tail_bound()
    assert a == 2.0 and alpha == 2.0
    # gamma with shape 1 is the exponential again
    assert DistributionSpec(GAMMA, 0.5, 1.0).tail_bound() == (2.0, 2.0)
    assert deterministic(1.0).tail_bound() is None


@pytest.mark.parametrize("mean,shape", [(1.0, 2.0), (0.3, 1.5), (2.0, 6.0)])
def test_tail_bound_dominates_gamma_density(mean, shape):
    # the envelope a*exp(-alpha*u) must dominate the density everywhere
    a, alpha = DistributionSpec(GAMMA, mean, shape).tail_bound()
    scale = mean / shape
    u = np.linspace(1e-9, mean + 40.0 * scale, 20000)
    density = (
        u ** (shape - 1.0)
        * np.exp(-u / scale)
        / (math.gamma(shape) * scale**shape)
    )
    assert np.all(density <= a * np.exp(-alpha * u) * (1 + 1e-12))


def test_to_dict_roundtrip():
    for d in [exponential(1.5), DistributionSpec(GAMMA, 1.0, 2.0), deterministic(0.7)]:
        assert DistributionSpec.from_dict(d.to_dict()) == d
    with pytest.raises(ConfigError, match="connections.eta1"):
        DistributionSpec.from_dict({"kind": "exp"}, where="connections.eta1")
    with pytest.raises(ConfigError, match="unknown keys"):
        DistributionSpec.from_dict({"mean": 1.0, "scale": 2.0})


def test_rng_is_reproducible_and_keyed():
    a = RngHandle(42).derive(3, 1)
    b = RngHandle(42).derive(3, 1)
    c = RngHandle(42).derive(3, 2)
    xs = [a.standard_exponential() for _ in range(5)]
    ys = [b.standard_exponential() for _ in range(5)]
    zs = [c.standard_exponential() for _ in range(5)]
    assert xs == ys
    assert xs != zs
    assert a.position == 5


def test_rng_rejects_bad_seeds():
    with pytest.raises(ConfigError):
        RngHandle(-1)
    with pytest.raises(ConfigError):
        RngHandle("7")
    with pytest.raises(ConfigError):
        RngHandle(True)


@given(
    st.sampled_from([EXPONENTIAL, GAMMA, DETERMINISTIC]),
    st.floats(min_value=1e-3, max_value=1e3),
    st.floats(min_value=1.0, max_value=50.0),
    st.integers(min_value=0, max_value=2**32 - 1),
)
@settings(max_examples=60, deadline=None)
def test_samples_are_positive(kind, mean, shape, seed):
    d = DistributionSpec(kind, mean, shape if kind == GAMMA else None)
    rng = RngHandle(seed)
    for _ in range(5):
        assert d.sample(rng) > 0.0
