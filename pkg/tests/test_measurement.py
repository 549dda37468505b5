import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmfidelity.exceptions import DomainError
from qmfidelity.measurement import (
    ModeSpectrum,
    OverlapVector,
    aligned_identity,
    detection_probabilities,
    fidelity_case_i,
    interference_objective,
    tune_pulse_shaper,
)


def random_spectrum(rng, n_modes):
    weights = rng.dirichlet(np.ones(n_modes + 1))
    p0 = 1.0 - float(np.sum(weights[1:]))
    return ModeSpectrum(tuple(sorted(weights[1:], reverse=True)), p0)


def random_overlaps(rng, n_modes):
    raw = rng.dirichlet(np.ones(n_modes + 1))[:n_modes]
    return OverlapVector(tuple(raw))


class TestDetectionProbabilities:
    def test_indistinguishable(self):
        d = detection_probabilities(ModeSpectrum((1.0,), 0.0), OverlapVector((1.0,)))
        assert (d.P1, d.P2, d.P12) == (0.5, 0.5, 0.0)

    def test_distinguishable(self):
        d = detection_probabilities(ModeSpectrum((1.0,), 0.0), OverlapVector((0.0,)))
        assert (d.P1, d.P2, d.P12) == (0.25, 0.25, 0.5)

    def test_lossy_aligned(self):
        d = detection_probabilities(ModeSpectrum((0.8,), 0.2), OverlapVector((1.0,)))
        assert d.P1 == pytest.approx(0.5, abs=1e-15) and d.P12 == 0.0
        assert d.objective == pytest.approx(1.0, abs=1e-15)

    def test_nothing_retrieved(self):
        d = detection_probabilities(ModeSpectrum((0.0, 0.0), 1.0), OverlapVector((0.3, 0.2)))
        assert (d.P1, d.P2, d.P12) == (0.5, 0.5, 0.0)

    def test_identity_random_spectra(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            n = int(rng.integers(1, 6))
            s, o = random_spectrum(rng, n), random_overlaps(rng, n)
            d = detection_probabilities(s, o)
            rhs = s.p0 + sum(p * ov for p, ov in zip(s.p, o.O))
            assert abs(d.P1 + d.P2 - d.P12 - rhs) <= 1e-12
            assert 0 <= d.P12 <= d.P1 + d.P2 and 0 <= d.P1 <= 1

    def test_zero_coincidences_iff_full_overlap(self):
        s = ModeSpectrum((0.6, 0.3, 0.0), 0.1)
        assert detection_probabilities(s, OverlapVector((1.0, 0.0, 0.0))).P12 > 0
        # Full overlap with every occupied mode is impossible for one reference mode
        # unless only one mode is occupied.
        single = ModeSpectrum((0.7, 0.0), 0.3)
        assert detection_probabilities(single, OverlapVector((1.0, 0.0))).P12 == 0.0
        assert detection_probabilities(single, OverlapVector((0.99, 0.0))).P12 > 0

    def test_length_mismatch(self):
        with pytest.raises(DomainError, match="modes"):
            detection_probabilities(ModeSpectrum((1.0,), 0.0), OverlapVector((0.5, 0.5)))


class TestValidation:
    def test_not_normalized(self):
        with pytest.raises(DomainError, match="equal 1"):
            ModeSpectrum((0.5,), 0.4)

    def test_not_descending(self):
        with pytest.raises(DomainError, match="descending"):
            ModeSpectrum((0.3, 0.5), 0.2)

    def test_overlap_range(self):
        with pytest.raises(DomainError):
            OverlapVector((1.2,))
        with pytest.raises(DomainError, match="sum"):
            OverlapVector((0.7, 0.6))


class TestAlignedIdentity:
    @pytest.mark.parametrize("p, p0, expected", [
        ((1.0,), 0.0, 1.0),
        ((0.6, 0.4), 0.0, 0.6),
        ((0.5, 0.3), 0.2, 0.7),
    ])
    def test_examples(self, p, p0, expected):
        assert aligned_identity(ModeSpectrum(p, p0)) == expected

    @given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=6))
    @settings(max_examples=300, deadline=None)
    def test_exact_on_random_spectra(self, raw):
        total = sum(raw)
        if total == 0:
            return
        weights = sorted((x / total for x in raw[1:]), reverse=True)
        p0 = 1.0 - sum(weights)
        try:
            s = ModeSpectrum(tuple(weights), p0)
        except DomainError:
            return
        assert aligned_identity(s) == s.p0 + s.p[0]


class TestTuning:
    def test_selects_aligned(self):
        s = ModeSpectrum((1.0,), 0.0)
        index, probs = tune_pulse_shaper(s, [OverlapVector((1.0,)), OverlapVector((0.0,))])
        assert index == 0 and probs.P12 == 0.0

    def test_aligned_beats_partial(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            n = int(rng.integers(1, 5))
            s = random_spectrum(rng, n)
            if s.p[0] == 0:
                continue
            partial = [OverlapVector((float(rng.uniform(0, 0.999)),) + (0.0,) * (n - 1))
                       for _ in range(4)]
            candidates = partial + [OverlapVector.aligned(n)]
            index, _ = tune_pulse_shaper(s, candidates)
            assert index == len(candidates) - 1

    def test_tie_lowest_index(self):
        s = ModeSpectrum((0.5, 0.5), 0.0)
        index, _ = tune_pulse_shaper(s, [OverlapVector((0.2, 0.3)), OverlapVector((0.3, 0.2)),
                                         OverlapVector((1.0, 0.0)), OverlapVector((0.0, 1.0))])
        assert index == 2

    def test_permutation_invariant_objective(self):
        s = ModeSpectrum((0.5, 0.3), 0.2)
        candidates = [OverlapVector((0.4, 0.1)), OverlapVector((0.9, 0.05)),
                      OverlapVector((0.1, 0.8))]
        best = max(interference_objective(s, o) for o in candidates)
        for perm in itertools.permutations(candidates):
            index, _ = tune_pulse_shaper(s, perm)
            assert interference_objective(s, perm[index]) == best

    def test_empty(self):
        with pytest.raises(DomainError):
            tune_pulse_shaper(ModeSpectrum((1.0,), 0.0), [])


class TestCaseI:
    @pytest.mark.parametrize("value", [1.0, 0.0, 0.374211])
    def test_pass_through(self, value):
        assert fidelity_case_i(value) == value

    def test_range(self):
        with pytest.raises(DomainError):
            fidelity_case_i(1.1)


class TestCsv:
    def test_round_trip(self, tmp_path):
        s = ModeSpectrum((0.5, 0.3), 0.2)
        path = tmp_path / "spectrum.csv"
        s.to_csv(path)
        assert ModeSpectrum.from_csv(path) == s

    def test_missing_p0(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("m,p_m\n1,1.0\n")
        with pytest.raises(DomainError, match="m=0"):
            ModeSpectrum.from_csv(path)

    def test_wrong_columns(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("mode,prob\n0,1.0\n")
        with pytest.raises(DomainError, match="columns"):
            ModeSpectrum.from_csv(path)
