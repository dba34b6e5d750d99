"""Distribution specifications and seeded sampling streams.

Every random quantity in the model (refill values Y, impulse magnitudes,
initial conditions) is described by a :class:`DistributionSpec` — a small
value object naming the family and its mean — and drawn through an
:class:`RngHandle`, a counted wrapper around a numpy PCG64 generator.
Handles are derived from a root seed by key tuples, so any component of a
larger experiment (a sweep cell, a replication, the dynamics stream vs. the
bookkeeping stream) gets an independent, reproducible stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

EXPONENTIAL = "exponential"
GAMMA = "gamma"
DETERMINISTIC = "deterministic"

KINDS = (EXPONENTIAL, GAMMA, DETERMINISTIC)

# integer codes used by the simulation kernels
KIND_CODES = {EXPONENTIAL: 0, GAMMA: 1, DETERMINISTIC: 2}


@dataclass(frozen=True)
class DistributionSpec:
    """A positive random variable, parameterized by its mean.

    ``exponential``: mean ``m`` (one underlying standard-exponential draw).
    ``gamma``: mean ``m`` and shape ``k >= 1``; scale is ``m / k``.  Shapes
    below one are rejected because their density is unbounded at the origin
    and violates the exponential-tail envelope the theory assumes.
    ``deterministic``: the constant ``m``; consumes no randomness.  Allowed
    wherever only means matter, but carries no density (``tail_bound`` is
    ``None``).
    """

    kind: str
    mean: float
    shape: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown distribution kind {self.kind!r}; expected one of {KINDS}")
        if not (isinstance(self.mean, (int, float)) and math.isfinite(self.mean)):
            raise ConfigError(f"distribution mean must be finite, got {self.mean!r}")
        if self.mean <= 0:
            raise ConfigError(f"distribution mean must be > 0, got {self.mean}")
        if self.kind == GAMMA:
            if self.shape is None or not math.isfinite(self.shape):
                raise ConfigError("gamma distribution requires a finite shape")
            if self.shape < 1:
                raise ConfigError(
                    f"gamma shape must be >= 1 (bounded density with exponential tail), got {self.shape}"
                )
        elif self.shape is not None:
            raise ConfigError(f"shape only applies to gamma distributions, got kind={self.kind!r}")

    # -- sampling ---------------------------------------------------------

    def sample(self, rng: "RngHandle") -> float:
        """Draw one value.  Deterministic specs consume no stream position."""
        if self.kind == EXPONENTIAL:
            return self.mean * rng.standard_exponential()
        if self.kind == GAMMA:
            return (self.mean / self.shape) * rng.standard_gamma(self.shape)
        return self.mean

    def scaled(self, factor: float) -> "DistributionSpec":
        """The distribution of ``factor * X`` (exact for all three families)."""
        if factor <= 0:
            raise ConfigError(f"scale factor must be > 0, got {factor}")
        return DistributionSpec(self.kind, factor * self.mean, self.shape)

    # -- analytics --------------------------------------------------------

    def tail_bound(self) -> tuple[float, float] | None:
        """Constants ``(a, alpha)`` with density ``g(u) <= a * exp(-alpha*u)``.

        Returns ``None`` for deterministic specs (no density).  For the
        exponential with mean ``m`` this is ``(1/m, 1/m)``, which is tight.
        """
        if self.kind == EXPONENTIAL:
            return (1.0 / self.mean, 1.0 / self.mean)
        if self.kind == GAMMA:
            k = float(self.shape)
            scale = self.mean / k
            if k == 1.0:
                return (1.0 / scale, 1.0 / scale)
            # keep half the exponential rate and absorb u**(k-1) into the
            # constant: sup_u u**(k-1) exp(-u/(2*scale)) at u* = 2*scale*(k-1)
            alpha = 1.0 / (2.0 * scale)
            log_a = (
                (k - 1.0) * (math.log(2.0 * scale * (k - 1.0)) - 1.0)
                - math.lgamma(k)
                - k * math.log(scale)
            )
            return (math.exp(log_a), alpha)
        return None

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "mean": self.mean}
        if self.shape is not None:
            out["shape"] = self.shape
        return out

    @classmethod
    def from_dict(cls, data: dict, where: str = "distribution") -> "DistributionSpec":
        if not isinstance(data, dict):
            raise ConfigError(f"{where}: expected an object, got {type(data).__name__}")
        unknown = set(data) - {"kind", "mean", "shape"}
        if unknown:
            raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
        try:
            return cls(data.get("kind", EXPONENTIAL), data.get("mean", 1.0), data.get("shape"))
        except ConfigError as exc:
            raise ConfigError(f"{where}: {exc}") from None


def mean_of(dist: DistributionSpec) -> float:
    """Exact analytic mean of a spec (the parameterization makes it a field)."""
    return dist.mean


def exponential(mean: float = 1.0) -> DistributionSpec:
    return DistributionSpec(EXPONENTIAL, mean)


def deterministic(value: float) -> DistributionSpec:
    return DistributionSpec(DETERMINISTIC, value)


class RngHandle:
    """A counted, derivable random stream.

    The stream is identified by ``(seed, *stream)`` fed to numpy's
    ``SeedSequence``; ``derive(*keys)`` appends keys, giving statistically
    independent child streams with reproducible identities.  ``position``
    counts scalar draws actually consumed, so a simulation can report how
    much randomness it used and tests can assert two code paths consumed
    streams identically.
    """

    __slots__ = ("seed", "stream", "position", "_generator")

    def __init__(self, seed: int, stream: tuple[int, ...] = ()):
        if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
            raise ConfigError(f"seed must be an integer, got {seed!r}")
        if seed < 0:
            raise ConfigError(f"seed must be >= 0, got {seed}")
        self.seed = int(seed)
        self.stream = tuple(int(k) for k in stream)
        self.position = 0
        self._generator = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence((self.seed, *self.stream)))
        )

    def derive(self, *keys: int) -> "RngHandle":
        return RngHandle(self.seed, self.stream + tuple(keys))

    @property
    def generator(self) -> np.random.Generator:
        return self._generator

    @property
    def bit_generator(self) -> np.random.BitGenerator:
        return self._generator.bit_generator

    def standard_exponential(self) -> float:
        self.position += 1
        return float(self._generator.standard_exponential())

    def standard_gamma(self, shape: float) -> float:
        self.position += 1
        return float(self._generator.standard_gamma(shape))

    def uniform(self) -> float:
        self.position += 1
        return float(self._generator.random())

    def __repr__(self):
        return f"RngHandle(seed={self.seed}, stream={self.stream}, position={self.position})"
