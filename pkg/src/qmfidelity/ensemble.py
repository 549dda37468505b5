"""Monte Carlo reference for the channel moments.

Each sample draws concrete per-absorber parameters for both logical
ensembles and follows the photon through the whole memory cycle in the
single-excitation manifold, ending with the retrieved amplitude ``b_q``.
Averages over samples estimate the same moments the closed forms in
:mod:`.core` predict.

Within a stage the couplings are ``kappa_j exp(i (D_j t + phi_j))``.  In the
frame rotating with ``exp(i D_j t)`` on absorber ``j`` the amplitude equations
become time independent::

    i d/dt a   = sum_j conj(g_j) c_j
    i d/dt c_j = D_j c_j + g_j a,        g_j = kappa_j exp(i phi_j)

which is integrated with classical fixed-step RK4.  ``a`` is the input mode
during read-in and the output mode during read-out.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .core import (
    BroadeningParams,
    ChannelMoments,
    FidelityResult,
    TwoQubitState,
    entanglement_fidelity,
    fidelity_at_x,
)
from .exceptions import DomainError, IntegrationError

MAX_DIRECT_N = 5000
DEFAULT_ODE_TOL = 1e-8
NORM_TOL = 1e-6
# Samples per batch.  Fixed so that every sample is computed identically
# regardless of how many workers share the batches.
CHUNK_SIZE = 128
_MIN_STEPS = 16


@dataclass(frozen=True)
class RealizationModel:
    """How per-absorber parameters are drawn.

    ``"independent"`` draws every parameter separately from its Gaussian.
    With ``redraw_kappa`` the read-out coupling magnitudes are a fresh draw
    rather than a copy of the read-in ones.

    ``"velocity"`` draws one thermal velocity per absorber (``v/c`` with
    standard deviation ``w_K / omega_c``) and sets ``K = M = omega_c v/c``,
    ``f = chi v/c``; couplings are constant at ``kappa_mean``.
    """

    kind: str = "independent"
    omega_c: float | None = None
    chi: float | None = None
    redraw_kappa: bool = True

    def __post_init__(self):
        if self.kind not in ("independent", "velocity"):
            raise DomainError(f"unknown realization model {self.kind!r}")
        if self.kind == "velocity":
            if self.omega_c is None or not self.omega_c > 0:
                raise DomainError("velocity model requires omega_c > 0")
            if self.chi is None or not math.isfinite(self.chi):
                raise DomainError("velocity model requires a finite chi")

    @classmethod
    def independent(cls, redraw_kappa: bool = True) -> "RealizationModel":
        return cls("independent", redraw_kappa=redraw_kappa)

    @classmethod
    def velocity_driven(cls, omega_c: float, chi: float) -> "RealizationModel":
        return cls("velocity", omega_c=float(omega_c), chi=float(chi))


INDEPENDENT = RealizationModel.independent()


@dataclass
class AbsorberRealization:
    """One concrete draw of every absorber's parameters."""

    kappa: np.ndarray
    K: np.ndarray
    M: np.ndarray
    delta_a: np.ndarray
    delta_b: np.ndarray
    f: np.ndarray
    kappa_out: np.ndarray | None = None

    def __post_init__(self):
        if self.kappa_out is None:
            self.kappa_out = self.kappa
        n = len(self.kappa)
        if n < 1:
            raise DomainError("realization needs at least one absorber")
        for name in ("K", "M", "delta_a", "delta_b", "f", "kappa_out"):
            if len(getattr(self, name)) != n:
                raise DomainError(f"{name} has length {len(getattr(self, name))}, expected {n}")

    @property
    def n_absorbers(self) -> int:
        return len(self.kappa)


@dataclass
class SingleExcitationState:
    """Amplitudes of the input mode, output mode and each absorber."""

    c_in: complex
    c_out: complex
    c_abs: np.ndarray
    max_norm_drift: float = 0.0

    @property
    def norm(self) -> float:
        return abs(self.c_in) ** 2 + abs(self.c_out) ** 2 + float(np.sum(np.abs(self.c_abs) ** 2))


@dataclass
class MomentEstimate:
    moments: ChannelMoments
    n_samples: int
    seed: int
    b0: np.ndarray = field(repr=False)
    b1: np.ndarray = field(repr=False)


def _check_seed(seed):
    if int(seed) != seed or not 0 <= seed < 2**64:
        raise DomainError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return int(seed)


def _rng(seed: int, sample_index: int, logical: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, sample_index, logical]))


def _positive_normal(rng, mean, width, n):
    """Gaussian draws conditioned on being > 0 (rejection)."""
    values = mean + width * rng.standard_normal(n)
    bad = values <= 0
    while bad.any():
        values[bad] = mean + width * rng.standard_normal(int(bad.sum()))
        bad = values <= 0
    return values


def draw_realization(
    p: BroadeningParams,
    model: RealizationModel = INDEPENDENT,
    seed: int = 0,
    sample_index: int = 0,
    logical: int = 0,
) -> AbsorberRealization:
    """Draw every absorber's parameters for one sample.

    The result depends only on ``(seed, sample_index, logical)`` and the
    inputs, never on call order.
    """
    seed = _check_seed(seed)
    rng = _rng(seed, sample_index, logical)
    n = p.n_absorbers
    if model.kind == "velocity":
        beta_sd = p.w_K / model.omega_c
        beta = beta_sd * rng.standard_normal(n)
        K = p.K_mean + model.omega_c * beta
        M = p.M_mean + model.omega_c * beta
        kappa = np.full(n, p.kappa_mean)
        zeros = np.zeros(n)
        return AbsorberRealization(kappa, K, M, zeros, zeros.copy(), model.chi * beta)
    kappa = _positive_normal(rng, p.kappa_mean, p.kappa_width, n)
    K = p.K_mean + p.w_K * rng.standard_normal(n)
    M = p.M_mean + p.w_M * rng.standard_normal(n)
    delta_a = p.w_a * rng.standard_normal(n)
    delta_b = p.w_b * rng.standard_normal(n)
    f = p.w_f * rng.standard_normal(n)
    kappa_out = _positive_normal(rng, p.kappa_mean, p.kappa_width, n) if model.redraw_kappa else kappa
    return AbsorberRealization(kappa, K, M, delta_a, delta_b, f, kappa_out)


def steps_for(rate_times_tp: float, ode_tol: float) -> int:
    """RK4 steps per stage so that (h * rate)^4 stays near ``ode_tol``."""
    if not ode_tol > 0:
        raise DomainError(f"ode_tol must be positive, got {ode_tol}")
    return max(_MIN_STEPS, math.ceil(rate_times_tp / ode_tol**0.25))


def _steps_for_params(p: BroadeningParams, t_p: float, ode_tol: float) -> int:
    # Conservative bound on the fastest rate: 5-sigma couplings and detunings.
    kappa_hi = p.kappa_mean + 5.0 * p.kappa_width
    det_hi = max(abs(p.K_mean), abs(p.M_mean)) + 5.0 * max(p.w_K, p.w_M)
    return steps_for(t_p * (math.sqrt(p.n_absorbers) * kappa_hi + det_hi), ode_tol)


def _steps_for_realization(r: AbsorberRealization, t_p: float, ode_tol: float) -> int:
    collective = math.sqrt(max(np.sum(r.kappa**2), np.sum(r.kappa_out**2)))
    det = max(np.max(np.abs(r.K)), np.max(np.abs(r.M)))
    return steps_for(t_p * (collective + det), ode_tol)


@njit(cache=True, nogil=True)
def _rk4_stage(a, c, g, det, t_p, n_steps):
    """Integrate one coupling stage for a single sample, in place on ``c``.

    Returns the final ``a`` and the largest norm drift seen at any step;
    ``c`` is left in the lab frame.
    """
    n = c.shape[0]
    h = t_p / n_steps
    gc = np.conj(g)
    norm0 = abs(a) ** 2
    for j in range(n):
        norm0 += c[j].real ** 2 + c[j].imag ** 2
    k1 = np.empty(n, np.complex128)
    k2 = np.empty(n, np.complex128)
    k3 = np.empty(n, np.complex128)
    k4 = np.empty(n, np.complex128)
    tmp = np.empty(n, np.complex128)
    worst = 0.0
    for _ in range(n_steps):
        s = 0j
        for j in range(n):
            s += gc[j] * c[j]
            k1[j] = -1j * (det[j] * c[j] + g[j] * a)
        ka1 = -1j * s
        a2 = a + 0.5 * h * ka1
        s = 0j
        for j in range(n):
            tmp[j] = c[j] + 0.5 * h * k1[j]
            s += gc[j] * tmp[j]
            k2[j] = -1j * (det[j] * tmp[j] + g[j] * a2)
        ka2 = -1j * s
        a3 = a + 0.5 * h * ka2
        s = 0j
        for j in range(n):
            tmp[j] = c[j] + 0.5 * h * k2[j]
            s += gc[j] * tmp[j]
            k3[j] = -1j * (det[j] * tmp[j] + g[j] * a3)
        ka3 = -1j * s
        a4 = a + h * ka3
        s = 0j
        for j in range(n):
            tmp[j] = c[j] + h * k3[j]
            s += gc[j] * tmp[j]
            k4[j] = -1j * (det[j] * tmp[j] + g[j] * a4)
        ka4 = -1j * s
        a = a + (h / 6.0) * (ka1 + 2.0 * ka2 + 2.0 * ka3 + ka4)
        norm = abs(a) ** 2
        for j in range(n):
            c[j] = c[j] + (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
            norm += c[j].real ** 2 + c[j].imag ** 2
        drift = abs(norm - norm0)
        if drift > worst:
            worst = drift
    for j in range(n):
        c[j] = c[j] * np.exp(1j * det[j] * t_p)
    return a, worst


@njit(cache=True, nogil=True)
def _simulate_one(kappa, K, M, delta_a, delta_b, f, kappa_out, t_p, n_steps,
                  apply_storage, storage_in_readout):
    n = kappa.shape[0]
    c = np.zeros(n, np.complex128)
    g_in = kappa * np.exp(1j * delta_a)
    c_in, drift_in = _rk4_stage(1.0 + 0j, c, g_in, K, t_p, n_steps)
    phase_out = delta_b.copy()
    if apply_storage:
        if storage_in_readout:
            # Same physics with the storage phase carried by the read-out coupling.
            phase_out = delta_b + f
        else:
            for j in range(n):
                c[j] = c[j] * np.exp(-1j * f[j])
    g_out = kappa_out * np.exp(1j * phase_out)
    b, drift_out = _rk4_stage(0j, c, g_out, M, t_p, n_steps)
    return c_in, b, c, drift_in + drift_out


@njit(cache=True, nogil=True)
def _simulate_batch(kappa, K, M, delta_a, delta_b, f, kappa_out, t_p, n_steps):
    s = kappa.shape[0]
    out = np.empty(s, np.complex128)
    drift = np.empty(s)
    for i in range(s):
        _, b, _, d = _simulate_one(kappa[i], K[i], M[i], delta_a[i], delta_b[i], f[i],
                                   kappa_out[i], t_p, n_steps, True, False)
        out[i] = b
        drift[i] = d
    return out, drift


def _raise_on_drift(drift, sample_offset=0):
    worst = int(np.argmax(drift))
    if drift[worst] > NORM_TOL:
        raise IntegrationError(
            f"norm drift {drift[worst]:.3g} at sample {sample_offset + worst} exceeds "
            f"{NORM_TOL}; use a smaller ode_tol",
            float(drift[worst]),
            sample_offset + worst,
        )


def simulate_logical_amplitude(
    r: AbsorberRealization,
    t_p: float,
    apply_storage: bool = True,
    ode_tol: float = DEFAULT_ODE_TOL,
    n_steps: int | None = None,
    storage_in_readout: bool = False,
    return_state: bool = False,
):
    """Retrieved amplitude ``b_q`` for one realization.

    The photon starts in the input mode.  Read-in lasts ``t_p``, the stored
    excitation of absorber ``j`` then picks up ``exp(-i f_j)``, and read-out
    lasts ``t_p`` with the input mode decoupled.  With ``return_state`` the
    full :class:`SingleExcitationState` after read-out is returned instead.
    """
    if not t_p > 0:
        raise DomainError(f"t_p must be positive, got {t_p}")
    if n_steps is None:
        n_steps = _steps_for_realization(r, t_p, ode_tol)
    arrays = [np.ascontiguousarray(x, dtype=float)
              for x in (r.kappa, r.K, r.M, r.delta_a, r.delta_b, r.f, r.kappa_out)]
    c_in, b, c, drift = _simulate_one(*arrays, float(t_p), int(n_steps), bool(apply_storage),
                                      bool(storage_in_readout))
    _raise_on_drift(np.array([drift]))
    if return_state:
        return SingleExcitationState(complex(c_in), complex(b), c, float(drift))
    return complex(b)


def _alignment_phase(p0, p1, t_p0, t_p1, n0, n1):
    """Relative phase that maps logical channel 1 onto channel 0's mean phase."""
    if p0.K_mean == p0.M_mean == p1.K_mean == p1.M_mean == 0.0:
        return 1.0
    ref = []
    for p, t_p, n_steps in ((p0, t_p0, n0), (p1, t_p1, n1)):
        n = p.n_absorbers
        mean = AbsorberRealization(np.full(n, p.kappa_mean), np.full(n, p.K_mean),
                                   np.full(n, p.M_mean), np.zeros(n), np.zeros(n), np.zeros(n))
        ref.append(simulate_logical_amplitude(mean, t_p, n_steps=n_steps))
    if abs(ref[0]) == 0 or abs(ref[1]) == 0:
        return 1.0
    return (ref[0] / abs(ref[0])) / (ref[1] / abs(ref[1]))


def _chunk_amplitudes(p, model, seed, start, stop, logical, t_p, n_steps):
    draws = [draw_realization(p, model, seed, i, logical) for i in range(start, stop)]
    stacked = [np.stack([getattr(r, name) for r in draws])
               for name in ("kappa", "K", "M", "delta_a", "delta_b", "f", "kappa_out")]
    b, drift = _simulate_batch(*stacked, float(t_p), int(n_steps))
    _raise_on_drift(drift, start)
    return b


def sample_amplitudes(
    p0: BroadeningParams,
    p1: BroadeningParams,
    model: RealizationModel = INDEPENDENT,
    n_samples: int = 1000,
    seed: int = 0,
    ode_tol: float = DEFAULT_ODE_TOL,
    threads: int = 1,
    model1: RealizationModel | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample retrieved amplitudes ``(b0, b1)`` after phase alignment.

    Logical state 0 and 1 use independent draws.  ``model1`` overrides the
    realization model for logical state 1.
    """
    seed = _check_seed(seed)
    if int(n_samples) != n_samples or n_samples < 1:
        raise DomainError(f"n_samples must be a positive integer, got {n_samples}")
    if threads < 1:
        raise DomainError(f"threads must be >= 1, got {threads}")
    for p in (p0, p1):
        if p.n_absorbers > MAX_DIRECT_N:
            raise DomainError(
                f"n_absorbers={p.n_absorbers} exceeds the direct-simulation limit {MAX_DIRECT_N}"
            )
    models = (model, model1 if model1 is not None else model)
    t_ps = (p0.pulse_time, p1.pulse_time)
    steps = tuple(_steps_for_params(p, t, ode_tol) for p, t in zip((p0, p1), t_ps))

    jobs = []
    for start in range(0, n_samples, CHUNK_SIZE):
        stop = min(start + CHUNK_SIZE, n_samples)
        for q, p in enumerate((p0, p1)):
            jobs.append((p, models[q], seed, start, stop, q, t_ps[q], steps[q]))
    if threads == 1:
        results = [_chunk_amplitudes(*job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda job: _chunk_amplitudes(*job), jobs))
    b0 = np.concatenate(results[0::2])
    b1 = np.concatenate(results[1::2])
    b1 = b1 * _alignment_phase(p0, p1, t_ps[0], t_ps[1], steps[0], steps[1])
    return b0, b1


def _mean_and_err(values):
    n = len(values)
    mean = float(np.sum(values) / n)
    if n < 2 or np.all(values == values[0]):
        return mean, 0.0
    return mean, float(np.std(values, ddof=1) / math.sqrt(n))


def moments_from_amplitudes(b0: np.ndarray, b1: np.ndarray) -> ChannelMoments:
    m00, e00 = _mean_and_err(np.abs(b0) ** 2)
    m11, e11 = _mean_and_err(np.abs(b1) ** 2)
    mc, ec = _mean_and_err(np.real(b0 * np.conj(b1)))
    return ChannelMoments(m00, m11, mc, e00, e11, ec)


def estimate_moments(
    p0: BroadeningParams,
    p1: BroadeningParams,
    model: RealizationModel = INDEPENDENT,
    n_samples: int = 1000,
    seed: int = 0,
    ode_tol: float = DEFAULT_ODE_TOL,
    threads: int = 1,
) -> MomentEstimate:
    """Sample means and standard errors of |b0|^2, |b1|^2 and Re(b0 b1*)."""
    b0, b1 = sample_amplitudes(p0, p1, model, n_samples, seed, ode_tol, threads)
    return MomentEstimate(moments_from_amplitudes(b0, b1), int(n_samples), int(seed), b0, b1)


def state_overlaps(phi0: TwoQubitState, b0: np.ndarray, b1: np.ndarray) -> np.ndarray:
    """Per-sample overlap of the input with the retrieved, mode-matched state.

    The retrieved branch of ``alpha|00> + beta|01> + gamma|10> + eta|11>`` is
    ``alpha b0|00> + beta b0|01> + gamma b1|10> + eta b1|11>``; every other
    branch leaves the photon elsewhere and is orthogonal to the input.
    """
    amps = np.asarray(phi0.amplitudes, dtype=complex)
    out = np.stack([b0, b0, b1, b1]) * amps[:, None]
    return np.conj(amps) @ out


def brute_force_state_fidelity(
    phi0: TwoQubitState,
    p0: BroadeningParams,
    p1: BroadeningParams,
    model: RealizationModel = INDEPENDENT,
    n_samples: int = 1000,
    seed: int = 0,
    ode_tol: float = DEFAULT_ODE_TOL,
    threads: int = 1,
) -> float:
    """Ensemble-averaged fidelity of one specific two-qubit input state."""
    if not isinstance(phi0, TwoQubitState):
        phi0 = TwoQubitState(*phi0)
    b0, b1 = sample_amplitudes(p0, p1, model, n_samples, seed, ode_tol, threads)
    overlap = state_overlaps(phi0, b0, b1)
    return float(np.sum(np.abs(overlap) ** 2) / len(overlap))


def mc_entanglement_fidelity(
    p0: BroadeningParams,
    p1: BroadeningParams,
    model: RealizationModel = INDEPENDENT,
    n_samples: int = 1000,
    seed: int = 0,
    ode_tol: float = DEFAULT_ODE_TOL,
    threads: int = 1,
) -> tuple[FidelityResult, MomentEstimate]:
    """Fidelity from sampled moments, with a standard error at fixed ``x0``."""
    est = estimate_moments(p0, p1, model, n_samples, seed, ode_tol, threads)
    result = entanglement_fidelity(est.moments)
    x0 = result.x0
    per_sample = np.abs(x0 * est.b0 + (1.0 - x0) * est.b1) ** 2
    _, f_err = _mean_and_err(per_sample)
    result = FidelityResult(fidelity_at_x(est.moments, x0), x0, result.degenerate, f_err)
    return result, est

