import dataclasses
import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trusttoken.errors import ParameterError
from trusttoken.puf_model import (
    Challenge,
    PufParams,
    Response,
    challenge_pairs,
    fractional_hamming,
    hamming_distance,
    measure_response,
    new_chip,
    randomness,
    reliability,
    uniqueness,
)


def bits(pattern, width=256):
    return Response((pattern * width)[:width])


class TestParams:
    def test_defaults_valid(self):
        p = PufParams()
        assert p.oscillator_count == 512
        assert p.response_bits == 256

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"oscillator_count": 511},  # < 2 x response_bits
            {"process_variation_sigma": 0.0},
            {"noise_sigma": -1.0},
            {"noise_sigma": 2e6},  # >= process_variation_sigma
            {"oscillator_count": 0},
            {"response_bits": 0},
        ],
    )
    def test_invalid_params_rejected(self, kwargs):
        with pytest.raises(ParameterError):
            PufParams(**kwargs)

    def test_challenge_must_fit_two_bytes(self):
        Challenge(0)
        Challenge(0xFFFF)
        with pytest.raises(ParameterError):
            Challenge(0x10000)
        with pytest.raises(ParameterError):
            Challenge(-1)


class TestNewChip:
    def test_deterministic(self, default_params):
        a = new_chip(7, default_params)
        b = new_chip(7, default_params)
        assert a.base_frequencies == b.base_frequencies

    def test_seed_sensitivity(self, default_params):
        a = new_chip(7, default_params)
        b = new_chip(8, default_params)
        assert a.base_frequencies != b.base_frequencies

    def test_length(self, chip, default_params):
        assert len(chip.base_frequencies) == default_params.oscillator_count

    def test_seed_range_checked(self, default_params):
        with pytest.raises(ParameterError):
            new_chip(-1, default_params)
        with pytest.raises(ParameterError):
            new_chip(2**64, default_params)


class TestMeasureResponse:
    def test_width_is_256_across_challenge_space(self, chip, default_params):
        for cv in (0, 1, 255, 4095, 65535):
            r = measure_response(chip, Challenge(cv), 0, default_params)
            assert r.width == 256

    def test_pairing_is_disjoint(self, default_params):
        for cv in (0, 17, 65535):
            pairs = challenge_pairs(Challenge(cv), default_params)
            flat = pairs.ravel().tolist()
            assert len(flat) == len(set(flat)) == 512

    def test_noiseless_ignores_measurement_seed(self, chip, default_params):
        r1 = measure_response(chip, Challenge(3), 1, default_params)
        r2 = measure_response(chip, Challenge(3), 999, default_params)
        assert r1 == r2

    def test_distinct_challenges_differ(self, chip, default_params):
        r1 = measure_response(chip, Challenge(1), 0, default_params)
        r2 = measure_response(chip, Challenge(2), 0, default_params)
        assert hamming_distance(r1, r2) > 0

    def test_interchip_distance_strictly_between_0_and_1(self, default_params):
        a = new_chip(100, default_params)
        b = new_chip(200, default_params)
        ra = measure_response(a, Challenge(5), 0, default_params)
        rb = measure_response(b, Challenge(5), 0, default_params)
        assert 0.0 < fractional_hamming(ra, rb) < 1.0

    def test_noisy_measurement_deterministic_per_seed(self, chip):
        params = PufParams(noise_sigma=1e5)
        r1 = measure_response(chip, Challenge(9), 42, params)
        r2 = measure_response(chip, Challenge(9), 42, params)
        assert r1 == r2


class TestHammingDistance:
    def test_identity(self):
        assert hamming_distance(bits("0"), bits("0")) == 0

    def test_complement(self):
        assert hamming_distance(bits("0"), bits("1")) == 256

    def test_against_bit_loop_oracle(self, chip, default_params):
        a = measure_response(chip, Challenge(11), 0, default_params)
        b = measure_response(chip, Challenge(12), 0, default_params)
        expected = sum(1 for x, y in zip(a.bits, b.bits) if x != y)
        assert hamming_distance(a, b) == expected

    def test_padded_pattern_oracle(self):
        a = Response("0011" + "0" * 252)
        b = Response("0101" + "0" * 252)
        expected = sum(1 for x, y in zip(a.bits, b.bits) if x != y)
        assert expected == 2
        assert hamming_distance(a, b) == expected

    def test_width_mismatch(self):
        with pytest.raises(ParameterError):
            hamming_distance(Response("01"), Response("011"))

    @given(
        a=st.integers(0, 2**64 - 1),
        b=st.integers(0, 2**64 - 1),
    )
    @settings(max_examples=50)
    def test_symmetric_and_zero_on_self(self, a, b):
        ra = Response(format(a, "064b"))
        rb = Response(format(b, "064b"))
        assert hamming_distance(ra, rb) == hamming_distance(rb, ra)
        assert hamming_distance(ra, ra) == 0


class TestUniqueness:
    def test_identical_seeds_give_zero(self, default_params):
        chips = [new_chip(5, default_params), new_chip(5, default_params)]
        assert uniqueness(chips, Challenge(1), default_params) == 0.0

    def test_single_chip_rejected(self, chip, default_params):
        with pytest.raises(ParameterError):
            uniqueness([chip], Challenge(1), default_params)

    def test_permutation_invariant(self, default_params):
        chips = [new_chip(s, default_params) for s in (1, 2, 3)]
        u1 = uniqueness(chips, Challenge(4), default_params)
        u2 = uniqueness(list(reversed(chips)), Challenge(4), default_params)
        assert u1 == u2

    def test_population_near_ideal(self, default_params):
        chips = [new_chip(s, default_params) for s in range(20)]
        u = uniqueness(chips, Challenge(123), default_params)
        assert 45.0 <= u <= 55.0


class TestRandomness:
    def test_all_zeros(self):
        assert randomness(bits("0")) == 0.0

    def test_alternating(self):
        assert randomness(bits("01")) == 50.0

    def test_population_average(self, default_params):
        values = [
            randomness(measure_response(new_chip(s, default_params), Challenge(7), 0, default_params))
            for s in range(20)
        ]
        assert 42.0 <= sum(values) / len(values) <= 58.0


class TestReliability:
    def test_noiseless_exactly_100(self, chip, default_params):
        assert reliability(chip, Challenge(2), 10, default_params) == 100.0

    def test_small_noise_above_99(self, chip, default_params):
        params = dataclasses.replace(
            default_params, noise_sigma=default_params.process_variation_sigma / 20
        )
        assert reliability(chip, Challenge(2), 100, params) >= 99.0

    def test_too_few_measurements(self, chip, default_params):
        with pytest.raises(ParameterError):
            reliability(chip, Challenge(2), 1, default_params)


class TestPopulationBand:
    def test_mean_interchip_distance_in_band(self, default_params):
        chips = [new_chip(s, default_params) for s in range(20)]
        total = 0.0
        count = 0
        for cv in range(16):
            responses = [measure_response(c, Challenge(cv * 97), 0, default_params) for c in chips]
            for ra, rb in itertools.combinations(responses, 2):
                total += fractional_hamming(ra, rb)
                count += 1
        assert 0.40 <= total / count <= 0.60
