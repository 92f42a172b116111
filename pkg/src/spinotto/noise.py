"""Dephasing synthesis by randomizing the drive-stroke clock.

Each ramp is cut into N constant-field segments; the per-segment unitary
is kept but its duration receives zero-mean noise.  Averaging the
propagator over the noise produces exactly the double-commutator
dephasing generator, so external control noise acts as the lubricant.

Calibration: a target dephasing coefficient Lambda on a stroke of
duration tau is synthesized by segment-time fluctuations of standard
deviation

    sigma = sqrt(2 * tau * Lambda / N)        (time units)

around the mean tau/N.  Note this is an *absolute* jitter: for the
engine's very short strokes sigma exceeds the mean segment time by two
orders of magnitude, so individual segment durations routinely come out
negative (a backward micro-rotation - still unitary, still trace
preserving).  Only the ensemble average contracts; every single
trajectory conserves the transverse norm exactly.

A positivity-guarded relative sampler (`sample_segment_times`) is also
provided for callers that need strictly forward clocks; it cannot reach
the dephasing strengths used by the lubricated engine.

Randomness comes from counter-based Philox streams keyed on
(seed, cycle index, branch), so ensembles are reproducible and
trajectories can be generated independently in any order.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numpy.random import Generator, Philox

from . import backend
from .cycle import EngineParams, Schedule, branch_maps, cycle_map, limit_cycle
from .dynamics import segment_ladder
from .errors import InvalidSigma
from .thermo import CycleSummary

_BRANCH_CODE = {"ba": 0, "ab": 1}
SQRT3 = 3.0 ** 0.5


@dataclass(frozen=True)
class NoiseConfig:
    """Monte Carlo ensemble configuration.

    sigma_ab / sigma_ba are the absolute segment-time jitter widths (time
    units) as returned by :func:`sigma_for_lambda`.
    """

    n_segments: int = 200
    sigma_ab: float = 0.0
    sigma_ba: float = 0.0
    distribution: str = "uniform"
    seed: int = 0
    n_cycles: int = 2000
    n_batches: int = 20
    mode: str = "restart"

    def __post_init__(self):
        if self.n_segments < 1:
            raise ValueError("n_segments must be >= 1")
        if self.sigma_ab < 0.0 or self.sigma_ba < 0.0:
            raise InvalidSigma("sigma must be >= 0")
        if self.distribution not in ("uniform", "gaussian"):
            raise ValueError(f"unknown distribution {self.distribution!r}")
        if self.mode not in ("restart", "continuous"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.n_cycles < 1 or self.n_batches < 1 \
                or self.n_cycles % self.n_batches:
            raise ValueError("n_cycles must be a positive multiple of n_batches")


def sigma_for_lambda(lam: float, tau_ad: float, n: int) -> float:
    """Jitter width synthesizing dephasing coefficient lam on one stroke."""
    if lam < 0.0 or tau_ad < 0.0:
        raise ValueError("lam and tau_ad must be >= 0")
    if n < 1:
        raise ValueError("n must be >= 1")
    return float(np.sqrt(2.0 * tau_ad * lam / n))


def lambda_for_sigma(sigma: float, tau_ad: float, n: int) -> float:
    """Inverse of sigma_for_lambda: dephasing synthesized by a given jitter."""
    if tau_ad <= 0.0:
        raise ValueError("tau_ad must be > 0")
    return float(n * sigma * sigma / (2.0 * tau_ad))


def trajectory_stream(seed: int, cycle: int, branch: str) -> Generator:
    """Independent Philox substream for one (cycle, branch) trajectory."""
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, 0x9E3779B97F4A7C15],
                   dtype=np.uint64)
    counter = np.array([0, 0, cycle, _BRANCH_CODE.get(branch, 2 + hash(branch) % 61)],
                       dtype=np.uint64)
    return Generator(Philox(key=key, counter=counter))


def _unit_noise(rng: Generator, n: int, distribution: str) -> np.ndarray:
    """Zero-mean unit-variance draws of the selected family."""
    if distribution == "uniform":
        return rng.uniform(-SQRT3, SQRT3, size=n)
    return rng.standard_normal(n)


def sample_time_jitter(tau: float, n: int, sigma: float, rng: Generator,
                       distribution: str = "uniform") -> np.ndarray:
    """Segment durations tau/n + sigma * u_k with unit-variance u_k.

    Sign-indefinite by design; this is the sampler behind the dephasing
    synthesis.
    """
    return tau / n + sigma * _unit_noise(rng, n, distribution)


def sample_segment_times(tau: float, n: int, sigma: float, rng: Generator,
                         distribution: str = "uniform") -> np.ndarray:
    """Strictly positive segment durations (tau/n) * (1 + r_k).

    r_k has zero mean and variance sigma^2 *relative* to the mean segment
    time.  The bounded uniform family guarantees positivity for
    sigma < 1/sqrt(3); the gaussian variant resamples negative durations
    (negligible bias for sigma well below 1/3).
    """
    if sigma < 0.0:
        raise InvalidSigma("sigma must be >= 0")
    if distribution == "uniform":
        if sigma * SQRT3 >= 1.0:
            raise InvalidSigma(
                f"uniform segment noise needs sigma < 1/sqrt(3), got {sigma}"
            )
        r = rng.uniform(-SQRT3 * sigma, SQRT3 * sigma, size=n)
        return (tau / n) * (1.0 + r)
    if distribution == "gaussian":
        if sigma >= 1.0 / 3.0:
            raise InvalidSigma(
                "gaussian segment noise cannot guarantee positivity "
                f"at sigma = {sigma}"
            )
        r = sigma * rng.standard_normal(n)
        bad = r <= -1.0
        while np.any(bad):
            r[bad] = sigma * rng.standard_normal(int(bad.sum()))
            bad = r <= -1.0
        return (tau / n) * (1.0 + r)
    raise ValueError(f"unknown distribution {distribution!r}")


def noisy_adiabat(b0: np.ndarray, omega_start: float, omega_end: float,
                  tau: float, n: int, sigma: float, rng: Generator, J: float,
                  distribution: str = "uniform") -> np.ndarray:
    """Single noisy drive-stroke trajectory (no averaging).

    Uses the k/n field ladder; sigma is the absolute jitter width.  With
    sigma = 0 this reproduces the deterministic Lambda = 0 stroke at the
    same segmentation.
    """
    om = segment_ladder(omega_start, omega_end, n, "endpoint")
    dt = sample_time_jitter(tau, n, sigma, rng, distribution)
    states = np.asarray(b0, dtype=float).reshape(1, 5).copy()
    backend.noisy_branch(states, om.reshape(1, -1), dt.reshape(1, -1),
                         omega_start, omega_end, J)
    return states[0]


def frequency_noise_adiabat(b0: np.ndarray, omega_start: float,
                            omega_end: float, tau: float, n: int,
                            sigma: float, rng: Generator, J: float,
                            distribution: str = "uniform") -> np.ndarray:
    """Negative control: jitter the field ladder instead of the clock.

    The ensemble generator this produces is a double commutator with the
    bare polarization operator, which does not erase energy-basis
    coherences; the engine only degrades under it.
    """
    om = segment_ladder(omega_start, omega_end, n, "endpoint")
    om = om + sigma * _unit_noise(rng, n, distribution)
    dt = np.full(n, tau / n)
    states = np.asarray(b0, dtype=float).reshape(1, 5).copy()
    backend.noisy_branch(states, om.reshape(1, -1), dt.reshape(1, -1),
                         omega_start, omega_end, J)
    return states[0]


@dataclass(frozen=True)
class MonteCarloResult:
    """Ensemble summary: batch-mean estimates with standard errors."""

    mean: CycleSummary
    se: CycleSummary
    ds_rate_mean: float       # entropy production per unit cycle time
    ds_rate_se: float
    n_cycles: int
    n_batches: int
    batch_table: np.ndarray   # (n_batches, 7): P, dS, dS_rate, W_net, Q_h, Q_c, W_fric
    anchor: np.ndarray


def _draw_branch_arrays(params: EngineParams, schedule: Schedule,
                        cfg: NoiseConfig, kind: str):
    """Per-cycle ladders and durations for both drive strokes."""
    n, m = cfg.n_segments, cfg.n_cycles
    om_ba = segment_ladder(params.omega_b, params.omega_a, n, "endpoint")
    om_ab = segment_ladder(params.omega_a, params.omega_b, n, "endpoint")
    OM_ba = np.broadcast_to(om_ba, (m, n)).copy()
    OM_ab = np.broadcast_to(om_ab, (m, n)).copy()
    DT_ba = np.empty((m, n))
    DT_ab = np.empty((m, n))
    for i in range(m):
        u_ba = _unit_noise(trajectory_stream(cfg.seed, i, "ba"), n,
                           cfg.distribution)
        u_ab = _unit_noise(trajectory_stream(cfg.seed, i, "ab"), n,
                           cfg.distribution)
        if kind == "time":
            DT_ba[i] = schedule.tau_ba / n + cfg.sigma_ba * u_ba
            DT_ab[i] = schedule.tau_ab / n + cfg.sigma_ab * u_ab
        else:
            DT_ba[i] = schedule.tau_ba / n
            DT_ab[i] = schedule.tau_ab / n
            OM_ba[i] += cfg.sigma_ba * u_ba
            OM_ab[i] += cfg.sigma_ab * u_ab
    return OM_ba, DT_ba, OM_ab, DT_ab


def monte_carlo_cycle(params: EngineParams, schedule: Schedule,
                      cfg: NoiseConfig, kind: str = "time") -> MonteCarloResult:
    """Average engine performance over an ensemble of noisy cycles.

    kind = "time" jitters the segment clock (dephasing synthesis);
    kind = "frequency" jitters the field ladder (negative control).

    In restart mode every cycle starts from the matching deterministic
    limit cycle (for time noise, the one with the equivalent dephasing
    coefficients at the same segmentation), which makes the batch means
    unbiased estimators of the dephasing-dynamics values.  Continuous
    mode chains the state through the whole ensemble instead.
    """
    if kind not in ("time", "frequency"):
        raise ValueError(f"unknown noise kind {kind!r}")
    if schedule.tau_ba <= 0.0 or schedule.tau_ab <= 0.0:
        raise ValueError("noisy cycles need positive drive-stroke times")

    n = cfg.n_segments
    if kind == "time":
        lam_ba = lambda_for_sigma(cfg.sigma_ba, schedule.tau_ba, n)
        lam_ab = lambda_for_sigma(cfg.sigma_ab, schedule.tau_ab, n)
    else:
        lam_ba = lam_ab = 0.0
    anchor_params = replace(params, Lambda_ba=lam_ba, Lambda_ab=lam_ab)
    maps = branch_maps(anchor_params, schedule, n_seg=n, ladder="endpoint")
    b_star = limit_cycle(cycle_map(*maps))
    u_h, _, u_c, _ = maps

    OM_ba, DT_ba, OM_ab, DT_ab = _draw_branch_arrays(params, schedule, cfg,
                                                     kind)
    per_cycle = backend.mc_cycles(
        b_star, u_h.M, u_h.c, u_c.M, u_c.c, OM_ba, DT_ba, OM_ab, DT_ab,
        params.omega_b, params.omega_a, params.J, cfg.mode == "restart")

    w_net = per_cycle[:, 0]
    q_h = per_cycle[:, 1]
    q_c = per_cycle[:, 2]
    w_fric = per_cycle[:, 3] + per_cycle[:, 4]
    tau_cyc = schedule.tau_h + schedule.tau_c + per_cycle[:, 5]

    nb = cfg.n_batches
    per = cfg.n_cycles // nb

    def batch_means(x):
        return x.reshape(nb, per).mean(axis=1)

    bw, bq_h, bq_c, bwf, btau = map(batch_means,
                                    (w_net, q_h, q_c, w_fric, tau_cyc))
    b_p = -bw / btau
    b_ds = -(bq_h / params.T_h + bq_c / params.T_c)
    b_rate = b_ds / btau
    table = np.column_stack([b_p, b_ds, b_rate, bw, bq_h, bq_c, bwf])

    def mse(col):
        mean = float(col.mean())
        se = float(col.std(ddof=1) / np.sqrt(nb)) if nb > 1 else float("nan")
        return mean, se

    (p_m, p_s), (ds_m, ds_s), (w_m, w_s) = mse(b_p), mse(b_ds), mse(bw)
    (qh_m, qh_s), (qc_m, qc_s), (wf_m, wf_s) = mse(bq_h), mse(bq_c), mse(bwf)
    tau_m, tau_s = mse(btau)
    rate_m, rate_s = mse(b_rate)
    mean = CycleSummary(w_m, wf_m, w_m - wf_m, qh_m, qc_m, p_m, ds_m, tau_m)
    se = CycleSummary(w_s, wf_s, float("nan"), qh_s, qc_s, p_s, ds_s, tau_s)
    return MonteCarloResult(mean, se, rate_m, rate_s, cfg.n_cycles, nb,
                            table, b_star)


def ensemble_mean_adiabat_map(omega_start: float, omega_end: float,
                              tau: float, n: int, sigma: float,
                              n_samples: int, seed: int, J: float,
                              kind: str = "time",
                              distribution: str = "uniform") -> np.ndarray:
    """Monte Carlo estimate of the ensemble-averaged stroke map (3x3).

    Used to verify the synthesized generator against the closed-form
    dephasing map (time noise) or the bare-polarization double
    commutator (frequency noise).
    """
    om = segment_ladder(omega_start, omega_end, n, "endpoint")
    OM = np.broadcast_to(om, (n_samples, n)).copy()
    DT = np.empty((n_samples, n))
    branch = "ba" if omega_end < omega_start else "ab"
    for i in range(n_samples):
        u = _unit_noise(trajectory_stream(seed, i, branch), n, distribution)
        if kind == "time":
            DT[i] = tau / n + sigma * u
        else:
            DT[i] = tau / n
            OM[i] += sigma * u
    return backend.mean_adiabat_map(OM, DT, J)
