"""Behavioral ring-oscillator PUF model.

A virtual chip is a vector of oscillator base frequencies drawn from a
seeded process-variation distribution.  A 2-byte challenge selects 256
disjoint oscillator pairs; each response bit is the frequency comparison
of one pair.  Standard quality metrics (uniqueness, randomness,
reliability) are computed from populations of such chips.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

# Salt constants keep the independent RNG streams (pairing, measurement,
# provisioning) from colliding when raw seed values coincide.
_PAIRING_SALT = 0x5041
_MEASUREMENT_SALT = 0x4D45

# Fraction of the measurement-noise variance that is common-mode across all
# oscillators of one measurement (shared supply/temperature jitter).  The
# differential pair comparison cancels the common part, which is what makes
# RO-PUF readout stable in practice.
_COMMON_MODE_VARIANCE_FRACTION = 0.9

_U64_MAX = 2**64 - 1


def _check_u64(value: int, name: str) -> int:
    if not isinstance(value, int) or not 0 <= value <= _U64_MAX:
        raise ParameterError(f"{name} must be an unsigned 64-bit integer, got {value!r}")
    return value


@dataclass(frozen=True)
class PufParams:
    """Static parameters of the simulated oscillator array."""

    oscillator_count: int = 512
    response_bits: int = 256
    nominal_frequency: float = 100e6
    process_variation_sigma: float = 2e6
    noise_sigma: float = 0.0

    def __post_init__(self):
        if self.oscillator_count < 2 or self.response_bits < 1:
            raise ParameterError("oscillator_count and response_bits must be positive")
        if self.oscillator_count < 2 * self.response_bits:
            raise ParameterError(
                "oscillator_count must be at least 2 x response_bits "
                f"({self.oscillator_count} < {2 * self.response_bits})"
            )
        if self.process_variation_sigma <= 0:
            raise ParameterError("process_variation_sigma must be > 0")
        if self.noise_sigma < 0:
            raise ParameterError("noise_sigma must be >= 0")
        if self.noise_sigma >= self.process_variation_sigma:
            raise ParameterError("noise_sigma must be smaller than process_variation_sigma")


@dataclass(frozen=True)
class ChipFingerprint:
    """One virtual die: per-oscillator base frequencies, fixed at 'manufacture'."""

    chip_seed: int
    base_frequencies: tuple[float, ...]


@dataclass(frozen=True)
class Challenge:
    """2-byte challenge input addressing one oscillator pairing."""

    value: int

    def __post_init__(self):
        if not isinstance(self.value, int) or not 0 <= self.value <= 0xFFFF:
            raise ParameterError(f"challenge must fit in 2 bytes, got {self.value!r}")


@dataclass(frozen=True)
class Response:
    """Fixed-width bitstring response."""

    bits: str

    def __post_init__(self):
        if not self.bits or set(self.bits) - {"0", "1"}:
            raise ParameterError("response bits must be a non-empty string of 0/1")

    @property
    def width(self) -> int:
        return len(self.bits)

    def as_int(self) -> int:
        return int(self.bits, 2)


def new_chip(chip_seed: int, params: PufParams) -> ChipFingerprint:
    """Manufacture a chip: draw each base frequency from a generator seeded
    by (chip_seed, oscillator index), so regeneration is bit-identical."""
    _check_u64(chip_seed, "chip_seed")
    freqs = tuple(
        params.nominal_frequency
        + np.random.default_rng([chip_seed, i]).normal(0.0, params.process_variation_sigma)
        for i in range(params.oscillator_count)
    )
    return ChipFingerprint(chip_seed=chip_seed, base_frequencies=freqs)


def challenge_pairs(challenge: Challenge, params: PufParams) -> np.ndarray:
    """Deterministic mapping from a challenge to response_bits disjoint
    oscillator index pairs (shape (response_bits, 2))."""
    rng = np.random.default_rng([challenge.value, _PAIRING_SALT])
    perm = rng.permutation(params.oscillator_count)
    return perm[: 2 * params.response_bits].reshape(params.response_bits, 2)


def measure_response(
    chip: ChipFingerprint,
    challenge: Challenge,
    measurement_seed: int,
    params: PufParams,
) -> Response:
    """One readout of the chip for the given challenge.

    bit_j = 1 iff observed frequency of pair element a exceeds that of b;
    exact ties give 0.  Measurement noise is drawn per (seed, challenge)
    with per-oscillator sigma = noise_sigma, split into a common-mode part
    and an independent part.
    """
    _check_u64(measurement_seed, "measurement_seed")
    if len(chip.base_frequencies) != params.oscillator_count:
        raise ParameterError("chip was generated with different params")
    observed = np.asarray(chip.base_frequencies, dtype=float)
    if params.noise_sigma > 0:
        rng = np.random.default_rng([measurement_seed, challenge.value, _MEASUREMENT_SALT])
        common = rng.normal(0.0, math.sqrt(_COMMON_MODE_VARIANCE_FRACTION) * params.noise_sigma)
        individual = rng.normal(
            0.0,
            math.sqrt(1.0 - _COMMON_MODE_VARIANCE_FRACTION) * params.noise_sigma,
            size=params.oscillator_count,
        )
        observed = observed + common + individual
    pairs = challenge_pairs(challenge, params)
    bits = "".join("1" if observed[a] > observed[b] else "0" for a, b in pairs)
    return Response(bits)


def hamming_distance(a: Response, b: Response) -> int:
    """Number of differing bits between two equal-width responses."""
    if a.width != b.width:
        raise ParameterError(f"width mismatch: {a.width} != {b.width}")
    return (a.as_int() ^ b.as_int()).bit_count()


def fractional_hamming(a: Response, b: Response) -> float:
    return hamming_distance(a, b) / a.width


def uniqueness(chips, challenge: Challenge, params: PufParams) -> float:
    """Mean pairwise inter-chip fractional Hamming distance, in percent.

    Uses noiseless reference measurements; ideal value is 50%.
    """
    chips = list(chips)
    if len(chips) < 2:
        raise ParameterError("uniqueness needs at least 2 chips")
    quiet = dataclasses.replace(params, noise_sigma=0.0)
    responses = [measure_response(c, challenge, 0, quiet) for c in chips]
    dists = [
        fractional_hamming(ra, rb) for ra, rb in itertools.combinations(responses, 2)
    ]
    return 100.0 * sum(dists) / len(dists)


def randomness(response: Response) -> float:
    """Fraction of 1-bits in a response, in percent (ideal 50%)."""
    return 100.0 * response.bits.count("1") / response.width


def reliability(
    chip: ChipFingerprint,
    challenge: Challenge,
    n_measurements: int,
    params: PufParams,
    measurement_seed_base: int = 0,
) -> float:
    """100 minus the mean fractional intra-chip Hamming distance (percent)
    of noisy remeasurements against the noiseless reference response."""
    if n_measurements < 2:
        raise ParameterError("reliability needs at least 2 measurements")
    quiet = dataclasses.replace(params, noise_sigma=0.0)
    reference = measure_response(chip, challenge, 0, quiet)
    total = 0.0
    for m in range(n_measurements):
        remeasured = measure_response(chip, challenge, measurement_seed_base + m, params)
        total += fractional_hamming(reference, remeasured)
    return 100.0 - 100.0 * total / n_measurements


@dataclass(frozen=True)
class PopulationMetrics:
    """Aggregate metrics of a chip-population campaign."""

    n_chips: int
    n_challenges: int
    uniqueness_pct: float
    randomness_pct: float
    reliability_pct: float
    pairwise_distances: tuple[tuple[int, int, int, int], ...]  # (challenge, chip_a, chip_b, bits)

    def fraction_in_band(self, lo: float = 0.40, hi: float = 0.60, width: int = 256) -> float:
        """Fraction of pairwise distances inside the [lo, hi] fractional band."""
        if not self.pairwise_distances:
            return 0.0
        inside = sum(1 for _, _, _, d in self.pairwise_distances if lo * width <= d <= hi * width)
        return inside / len(self.pairwise_distances)


def evaluate_population(
    n_chips: int,
    n_challenges: int,
    master_seed: int,
    params: PufParams,
    reliability_measurements: int = 100,
) -> PopulationMetrics:
    """Run a full metric campaign over a seeded chip population.

    Uniqueness and the pairwise-distance list use noiseless measurements;
    reliability uses params.noise_sigma (100% exactly when it is zero).
    """
    if n_chips < 2:
        raise ParameterError("campaign needs at least 2 chips")
    if n_challenges < 1:
        raise ParameterError("campaign needs at least 1 challenge")
    _check_u64(master_seed, "master_seed")
    rng = np.random.default_rng([master_seed, 0xCA])
    challenge_values = rng.choice(0x10000, size=n_challenges, replace=False)
    chips = [
        new_chip(int(rng.integers(0, _U64_MAX, dtype=np.uint64, endpoint=True)), params)
        for _ in range(n_chips)
    ]

    quiet = dataclasses.replace(params, noise_sigma=0.0)
    pairwise = []
    uniq_total = 0.0
    uniq_count = 0
    ones_total = 0.0
    ones_count = 0
    for cv in challenge_values:
        challenge = Challenge(int(cv))
        responses = [measure_response(c, challenge, 0, quiet) for c in chips]
        for resp in responses:
            ones_total += randomness(resp)
            ones_count += 1
        for (ia, ra), (ib, rb) in itertools.combinations(enumerate(responses), 2):
            d = hamming_distance(ra, rb)
            pairwise.append((int(cv), ia, ib, d))
            uniq_total += d / ra.width
            uniq_count += 1

    rel = reliability(
        chips[0], Challenge(int(challenge_values[0])), max(2, reliability_measurements), params
    )
    return PopulationMetrics(
        n_chips=n_chips,
        n_challenges=n_challenges,
        uniqueness_pct=100.0 * uniq_total / uniq_count,
        randomness_pct=ones_total / ones_count,
        reliability_pct=rel,
        pairwise_distances=tuple(pairwise),
    )
