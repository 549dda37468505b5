"""Two-photon interference test of a memory's retrieved mode.

The retrieved photon (mixed over eigenmodes ``m`` with weights ``p_m``, and
absent with probability ``p0``) meets a reference photon shaped by a pulse
shaper on a 50:50 beam splitter.  Detectors do not resolve photon number.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction

from .exceptions import DomainError

_TOL = 1e-12


@dataclass(frozen=True)
class ModeSpectrum:
    """Eigenmode weights of the retrieved photon, in descending order."""

    p: tuple[float, ...]
    p0: float

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(float(x) for x in self.p))
        if any(not (math.isfinite(x) and x >= 0) for x in (*self.p, self.p0)):
            raise DomainError("mode probabilities must be finite and non-negative")
        if any(a < b for a, b in zip(self.p, self.p[1:])):
            raise DomainError("mode probabilities must be in descending order")
        total = self.p0 + math.fsum(self.p)
        if abs(total - 1.0) > _TOL:
            raise DomainError(f"p0 + sum(p) must equal 1, got {total!r}")

    @classmethod
    def from_csv(cls, path) -> "ModeSpectrum":
        """Read ``m,p_m`` rows; the row with ``m = 0`` carries ``p0``."""
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        if not rows or set(rows[0]) != {"m", "p_m"}:
            raise DomainError(f"{path}: expected columns m,p_m")
        by_index = {}
        for row in rows:
            m = int(row["m"])
            if m < 0 or m in by_index:
                raise DomainError(f"{path}: invalid or repeated mode index {m}")
            by_index[m] = float(row["p_m"])
        if 0 not in by_index:
            raise DomainError(f"{path}: missing m=0 row (p0)")
        modes = sorted(k for k in by_index if k > 0)
        if modes != list(range(1, len(modes) + 1)):
            raise DomainError(f"{path}: mode indices must run 1..M without gaps")
        return cls(tuple(by_index[m] for m in modes), by_index[0])

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["m", "p_m"])
            writer.writerow([0, repr(self.p0)])
            for m, value in enumerate(self.p, start=1):
                writer.writerow([m, repr(value)])


@dataclass(frozen=True)
class OverlapVector:
    """|<vac| a_PS b_m^dagger |vac>|^2 for each retrieved eigenmode."""

    O: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "O", tuple(float(x) for x in self.O))
        if any(not (math.isfinite(x) and 0 <= x <= 1) for x in self.O):
            raise DomainError("overlaps must lie in [0, 1]")
        if math.fsum(self.O) > 1 + _TOL:
            raise DomainError("overlaps with an orthonormal mode set must sum to <= 1")

    @classmethod
    def aligned(cls, n_modes: int) -> "OverlapVector":
        """Reference photon matched to the dominant retrieved mode."""
        return cls((1.0,) + (0.0,) * (n_modes - 1))


@dataclass(frozen=True)
class DetectionProbs:
    P1: float
    P2: float
    P12: float

    @property
    def objective(self) -> float:
        """P1 + P2 - P12, which equals p0 + p1 at alignment."""
        return self.P1 + self.P2 - self.P12


def detection_probabilities(s: ModeSpectrum, o: OverlapVector) -> DetectionProbs:
    if len(s.p) != len(o.O):
        raise DomainError(
            f"spectrum has {len(s.p)} modes but overlap vector has {len(o.O)} entries"
        )
    single = math.fsum(p * (1.0 + ov) for p, ov in zip(s.p, o.O)) / 4.0 + s.p0 / 2.0
    both = math.fsum(p * (1.0 - ov) for p, ov in zip(s.p, o.O)) / 2.0
    return DetectionProbs(single, single, both)


def interference_objective(s: ModeSpectrum, o: OverlapVector) -> float:
    """P1 + P2 - P12, evaluated in exact arithmetic and rounded once."""
    if len(s.p) != len(o.O):
        raise DomainError(
            f"spectrum has {len(s.p)} modes but overlap vector has {len(o.O)} entries"
        )
    p = [Fraction(x) for x in s.p]
    ov = [Fraction(x) for x in o.O]
    single = sum((pm * (1 + om) for pm, om in zip(p, ov)), Fraction(0)) / 4 + Fraction(s.p0) / 2
    both = sum((pm * (1 - om) for pm, om in zip(p, ov)), Fraction(0)) / 2
    return float(2 * single - both)


def aligned_identity(s: ModeSpectrum) -> float:
    """P1 + P2 - P12 with the pulse shaper on the dominant mode (= p0 + p1)."""
    if not s.p:
        return s.p0
    return interference_objective(s, OverlapVector.aligned(len(s.p)))


def tune_pulse_shaper(s: ModeSpectrum, candidate_overlaps) -> tuple[int, DetectionProbs]:
    """Pick the pulse-shaper setting maximising P1 + P2 - P12.

    Ties go to the lowest index.
    """
    candidates = list(candidate_overlaps)
    if not candidates:
        raise DomainError("at least one candidate overlap vector is required")
    objectives = [interference_objective(s, o) for o in candidates]
    best_index = max(range(len(candidates)), key=lambda i: (objectives[i], -i))
    return best_index, detection_probabilities(s, candidates[best_index])


def fidelity_case_i(p1_prob: float) -> float:
    """Fidelity from the dominant-mode weight when both logical states are stored alike.

    Only valid when the two logical states are absorbed and re-emitted
    identically; then the fidelity equals <<|b0|^2>>, which is the measured
    dominant-mode probability ``p1``.
    """
    if not 0.0 <= p1_prob <= 1.0:
        raise DomainError(f"p1 must lie in [0, 1], got {p1_prob}")
    return float(p1_prob)
