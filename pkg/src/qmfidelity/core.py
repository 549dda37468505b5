"""Closed-form entanglement fidelity of a two-ensemble quantum memory.

The fidelity of a memory that stores each logical photon state in its own
ensemble is fixed by three averaged output amplitudes::

    m00 = <<|b0|^2>>,   m11 = <<|b1|^2>>,   mc = Re <<b0 b1*>>

and the worst-case input reduces to a single weight ``x = |alpha|^2 + |beta|^2``
on logical state 0, giving the quadratic

    F(x) = x^2 m00 + 2 x (1 - x) mc + (1 - x)^2 m11

minimised over ``x`` in ``[0, 1]``.  Second-order perturbative values of the
moments for Gaussian parameter fluctuations are provided by
:func:`analytic_population_moment` and :func:`analytic_cross_moment`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .exceptions import DomainError, OutOfRegimeError

# Slack for moments produced by sampling / integration rather than algebra.
_MOMENT_TOL = 1e-9
_DEGENERATE_TOL = 1e-14


@dataclass(frozen=True)
class BroadeningParams:
    """Gaussian fluctuation model for one logical state's ensemble.

    Rates are in s^-1, phase widths in radians.  ``t_p`` is the read-in and
    read-out pulse duration; ``None`` selects :func:`optimal_pulse_time`.
    """

    kappa_mean: float
    kappa_width: float = 0.0
    w_K: float = 0.0
    w_M: float = 0.0
    w_a: float = 0.0
    w_b: float = 0.0
    w_f: float = 0.0
    n_absorbers: int = 1
    K_mean: float = 0.0
    M_mean: float = 0.0
    t_p: float | None = None

    def __post_init__(self):
        if not math.isfinite(self.kappa_mean) or self.kappa_mean <= 0:
            raise DomainError(f"kappa_mean must be positive, got {self.kappa_mean}")
        for name in ("kappa_width", "w_K", "w_M", "w_a", "w_b", "w_f"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise DomainError(f"{name} must be finite and >= 0, got {value}")
        for name in ("K_mean", "M_mean"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if int(self.n_absorbers) != self.n_absorbers or self.n_absorbers < 1:
            raise DomainError(f"n_absorbers must be an integer >= 1, got {self.n_absorbers}")
        object.__setattr__(self, "n_absorbers", int(self.n_absorbers))
        if self.t_p is not None and not (math.isfinite(self.t_p) and self.t_p > 0):
            raise DomainError(f"t_p must be positive, got {self.t_p}")

    @property
    def kappa_relative_width(self) -> float:
        return self.kappa_width / self.kappa_mean

    @property
    def kappa_second_moment(self) -> float:
        return self.kappa_mean**2 + self.kappa_width**2

    @property
    def pulse_time(self) -> float:
        if self.t_p is not None:
            return self.t_p
        return optimal_pulse_time(self.kappa_second_moment, self.n_absorbers)

    def replace(self, **changes) -> "BroadeningParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class ChannelMoments:
    """The three averaged output moments, with optional standard errors."""

    m00: float
    m11: float
    mc: float
    err00: float = 0.0
    err11: float = 0.0
    errc: float = 0.0

    def __post_init__(self):
        for name in ("m00", "m11"):
            value = getattr(self, name)
            if not (-_MOMENT_TOL <= value <= 1 + _MOMENT_TOL):
                raise DomainError(f"{name} must lie in [0, 1], got {value}")
        if not abs(self.mc) <= 1 + _MOMENT_TOL:
            raise DomainError(f"|mc| must not exceed 1, got {self.mc}")

    def cauchy_schwarz_gap(self) -> float:
        """sqrt(m00 m11) - |mc|; non-negative for any sample average.

        The perturbative closed forms can violate the bound at order 1/N
        because the population and cross corrections are truncated at
        different orders.
        """
        return math.sqrt(max(self.m00, 0.0) * max(self.m11, 0.0)) - abs(self.mc)

    def swapped(self) -> "ChannelMoments":
        """Exchange the roles of the two logical states."""
        return ChannelMoments(self.m11, self.m00, self.mc, self.err11, self.err00, self.errc)


@dataclass(frozen=True)
class FidelityResult:
    fidelity: float
    x0: float
    degenerate: bool
    fidelity_err: float = 0.0


@dataclass(frozen=True)
class TwoQubitState:
    """Photon (memory) qubit times auxiliary qubit, amplitudes of |00>, |01>, |10>, |11>."""

    amp00: complex
    amp01: complex
    amp10: complex
    amp11: complex

    def __post_init__(self):
        norm = sum(abs(a) ** 2 for a in self.amplitudes)
        if abs(norm - 1.0) > 1e-12:
            raise DomainError(f"state is not normalized (norm^2 = {norm!r})")

    @property
    def amplitudes(self) -> tuple[complex, complex, complex, complex]:
        return (self.amp00, self.amp01, self.amp10, self.amp11)


def theta_factor(w_tilde: float) -> float:
    """Weight of the detuning terms, (1 + 6w^2 + 3w^4) / (1 + w^2)^2.

    ``w_tilde`` is the coupling width relative to its mean.  The result lies
    in ``[1, 3)``.
    """
    if not w_tilde >= 0:
        raise DomainError(f"relative width must be >= 0, got {w_tilde}")
    w2 = w_tilde * w_tilde
    return (1.0 + 6.0 * w2 + 3.0 * w2 * w2) / (1.0 + w2) ** 2


def optimal_pulse_time(kappa_sq_second_moment: float, n_absorbers: int) -> float:
    """Pulse duration for complete collective transfer, pi / (2 sqrt(<kappa^2> N))."""
    if not kappa_sq_second_moment > 0:
        raise DomainError("second moment of kappa must be positive")
    if not n_absorbers > 0:
        raise DomainError("n_absorbers must be positive")
    return math.pi / (2.0 * math.sqrt(kappa_sq_second_moment * n_absorbers))


def _require_zero_means(p: BroadeningParams):
    if p.K_mean != 0.0 or p.M_mean != 0.0:
        raise DomainError(
            "analytic moments assume zero mean detunings; use the ensemble simulator "
            f"for K_mean={p.K_mean}, M_mean={p.M_mean}"
        )


def _detuning_ratio(p: BroadeningParams) -> float:
    # Theta (w_K^2 + w_M^2) / (N <kappa^2>), shared by both moment formulas.
    return (
        theta_factor(p.kappa_relative_width)
        * (p.w_K**2 + p.w_M**2)
        / (p.n_absorbers * p.kappa_second_moment)
    )


def _phase_exponent(p: BroadeningParams) -> float:
    return p.w_a**2 + p.w_b**2 + p.w_f**2


def analytic_population_moment(p: BroadeningParams, t_p: float | None = None) -> float:
    """Second-order estimate of <<|b_q|^2>> for one logical state.

    The expression holds for the optimal pulse time; ``t_p`` is accepted for
    interface symmetry with the simulator and only checked for positivity.

    Raises
    ------
    OutOfRegimeError
        If the detuning correction exceeds unity, i.e. perturbation theory
        has broken down.
    """
    _require_zero_means(p)
    if t_p is not None and not t_p > 0:
        raise DomainError(f"t_p must be positive, got {t_p}")
    correction = _detuning_ratio(p) / 8.0
    if correction > 1.0:
        raise OutOfRegimeError(
            f"detuning correction {correction:.6g} exceeds 1; "
            "perturbative population moment is invalid",
            correction,
        )
    n = p.n_absorbers
    w2 = p.kappa_relative_width**2
    coherent = (n - 1) / (n * (1.0 + w2) ** 2) * math.exp(-_phase_exponent(p))
    return (1.0 - correction) * (1.0 / n + coherent)


def analytic_cross_moment(p0: BroadeningParams, p1: BroadeningParams) -> float:
    """Second-order estimate of Re <<b0 b1*>> for independent ensembles."""
    _require_zero_means(p0)
    _require_zero_means(p1)
    prefactor = 1.0
    correction = 0.0
    for p in (p0, p1):
        prefactor *= math.exp(-_phase_exponent(p) / 2.0) / (1.0 + p.kappa_relative_width**2)
        correction += (4.0 + math.pi**2) * _detuning_ratio(p) / (64.0 * p.n_absorbers)
    if correction > 1.0:
        raise OutOfRegimeError(
            f"detuning correction {correction:.6g} exceeds 1; "
            "perturbative cross moment is invalid",
            correction,
        )
    return prefactor * (1.0 - correction)


def analytic_moments(p0: BroadeningParams, p1: BroadeningParams) -> ChannelMoments:
    return ChannelMoments(
        analytic_population_moment(p0),
        analytic_population_moment(p1),
        analytic_cross_moment(p0, p1),
    )


def fidelity_at_x(m: ChannelMoments, x: float) -> float:
    """Overlap fidelity for inputs with logical-0 weight ``x``."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x}")
    y = 1.0 - x
    return x * x * m.m00 + 2.0 * x * y * m.mc + y * y * m.m11


def optimal_x(m: ChannelMoments) -> tuple[float, bool]:
    """Minimiser of :func:`fidelity_at_x` over ``[0, 1]``.

    Returns ``(x0, degenerate)``.  When the quadratic is flat (both logical
    states behave identically) every ``x`` is a minimiser and ``x0 = 0.5`` is
    returned with ``degenerate=True``.  Endpoint ties resolve to ``x0 = 0``.
    """
    curvature = m.m00 - 2.0 * m.mc + m.m11
    if abs(curvature) <= _DEGENERATE_TOL and abs(m.m00 - m.m11) <= _DEGENERATE_TOL:
        return 0.5, True
    if curvature > 0:
        x = (m.m11 - m.mc) / curvature
        if 0.0 <= x <= 1.0:
            return x, False
    # Stationary point is outside [0, 1] or a maximum: compare endpoints.
    return (1.0, False) if m.m00 < m.m11 else (0.0, False)


def entanglement_fidelity(m: ChannelMoments) -> FidelityResult:
    """Worst-case entanglement fidelity for the given channel moments."""
    x0, degenerate = optimal_x(m)
    return FidelityResult(fidelity_at_x(m, x0), x0, degenerate)


def analytic_fidelity(p0: BroadeningParams, p1: BroadeningParams) -> FidelityResult:
    return entanglement_fidelity(analytic_moments(p0, p1))


def x_of_state(s: TwoQubitState) -> float:
    """Weight of logical photon state 0, |alpha|^2 + |beta|^2."""
    if not isinstance(s, TwoQubitState):
        s = TwoQubitState(*s)
    return abs(s.amp00) ** 2 + abs(s.amp01) ** 2
