"""Schedule optimization and sweep protocols.

The control knobs at fixed engine parameters are the four branch time
allocations.  `optimize_allocations` maximizes the limit-cycle output
power -W_net/tau_total over the allocation simplex at fixed total cycle
time, using multi-start Nelder-Mead on softmax-reparameterized fractions
(the reparameterization keeps the search unconstrained while the floor
keeps every branch map well conditioned).

`power_vs_cycle_time` implements the frozen-schedule comparison: each
cycle time is optimized with zero drive-stroke dephasing, then the power
is re-evaluated at the same schedule with the dephasing switched on.

`lambda_sigma_sweep` produces overlayable performance curves for the two
ways of generating dephasing: the closed-form generator ("lindblad") and
the segment-time noise synthesis ("noise"), with the coefficient ratio
between the two strokes held fixed across the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize

from .cycle import EngineParams, Schedule, cycle_power, run_cycle
from .dynamics import AdiabatParams, adiabat_propagate
from .errors import InfeasibleSchedule, NoContraction
from .noise import NoiseConfig, monte_carlo_cycle, sigma_for_lambda
from .thermo import accumulate_works


@dataclass(frozen=True)
class SweepSpec:
    """A one-dimensional experiment grid over a named control variable."""

    variable: str                 # cycle_time | Lambda | sigma | J
    grid: tuple
    params: EngineParams
    schedule: Schedule
    objective: str = "power"
    mode: str = "lindblad"        # lindblad | noise | both (Lambda/sigma sweeps)

    def __post_init__(self):
        if self.variable not in ("cycle_time", "Lambda", "sigma", "J"):
            raise ValueError(f"unknown sweep variable {self.variable!r}")
        g = np.asarray(self.grid, dtype=float)
        if g.size == 0 or (g.size > 1 and not np.all(np.diff(g) > 0)):
            raise ValueError("grid must be non-empty and strictly increasing")
        if self.objective not in ("power", "entropy", "w_friction"):
            raise ValueError(f"unknown objective {self.objective!r}")
        if self.mode not in ("lindblad", "noise", "both"):
            raise ValueError(f"unknown sweep mode {self.mode!r}")


@dataclass(frozen=True)
class OptimizeResult:
    schedule: Schedule
    power: float
    trace: tuple          # per-start rows (start, n_eval, fractions, power)
    n_evaluations: int


def _fractions_from_z(z: np.ndarray, floor: float) -> np.ndarray:
    zfull = np.concatenate([[0.0], z])
    w = np.exp(zfull - zfull.max())
    f = w / w.sum()
    f = np.maximum(f, floor)
    return f / f.sum()


def _start_points(seed: int, n_starts: int) -> list:
    """Structured starts (short drive strokes) padded with random draws."""
    structured = [
        np.array([0.25, 0.25, 0.25, 0.25]),
        np.array([0.40, 0.10, 0.40, 0.10]),
        np.array([0.45, 0.05, 0.45, 0.05]),
        np.array([0.49, 0.01, 0.49, 0.01]),
        np.array([0.495, 0.005, 0.495, 0.005]),
        np.array([0.60, 0.01, 0.38, 0.01]),
        np.array([0.38, 0.01, 0.60, 0.01]),
    ]
    gen = np.random.default_rng(seed)
    starts = structured[:n_starts]
    while len(starts) < n_starts:
        starts.append(gen.dirichlet(np.ones(4)))
    return [np.log(np.maximum(f[1:], 1e-12) / max(f[0], 1e-12))
            for f in starts]


def optimize_allocations(params: EngineParams, tau_total: float,
                         n_starts: int = 8, seed: int = 0,
                         n_seg: int = 512, ladder: str = "midpoint",
                         floor_frac: float = 1e-6,
                         maxiter: int = 400) -> OptimizeResult:
    """Best time allocation (tau_h, tau_ba, tau_c, tau_ab) at fixed total.

    Deterministic for a fixed seed and start count.  Raises
    InfeasibleSchedule when no start produces a contracting cycle.
    """
    if not tau_total > 0.0:
        raise InfeasibleSchedule(f"tau_total must be > 0, got {tau_total}")
    evals = [0]

    def negative_power(z):
        evals[0] += 1
        f = _fractions_from_z(z, floor_frac)
        sched = Schedule(*(tau_total * f))
        try:
            summary, _ = cycle_power(params, sched, n_seg=n_seg, ladder=ladder)
        except NoContraction:
            return 1e6
        return -summary.P_avg

    best = None
    trace = []
    for i, z0 in enumerate(_start_points(seed, n_starts)):
        res = minimize(negative_power, z0, method="Nelder-Mead",
                       options={"xatol": 1e-8, "fatol": 1e-12,
                                "maxiter": maxiter, "maxfev": 4 * maxiter})
        f = _fractions_from_z(res.x, floor_frac)
        trace.append((i, int(res.nfev), tuple(tau_total * f), -float(res.fun)))
        if res.fun < 1e5 and (best is None or res.fun < best[0]):
            best = (res.fun, f)
    if best is None:
        raise InfeasibleSchedule(
            f"no contracting schedule found at tau_total = {tau_total}"
        )
    sched = Schedule(*(tau_total * best[1]))
    return OptimizeResult(sched, -float(best[0]), tuple(trace), evals[0])


def power_vs_cycle_time(params: EngineParams, tau_grid,
                        n_starts: int = 8, seed: int = 0,
                        n_seg: int = 512, ladder: str = "midpoint"):
    """Frozen-schedule comparison across total cycle times.

    For each grid point the allocation is optimized with the drive-stroke
    dephasing off; the reference power is that optimum, the "lubricated"
    power re-evaluates the same schedule with params.Lambda_ba/Lambda_ab.
    Returns rows (tau, schedule, P_ref, P_lub).
    """
    reference = replace(params, Lambda_ab=0.0, Lambda_ba=0.0)
    rows = []
    for tau in np.asarray(tau_grid, dtype=float):
        res = optimize_allocations(reference, float(tau), n_starts=n_starts,
                                   seed=seed, n_seg=n_seg, ladder=ladder)
        lub, _ = cycle_power(params, res.schedule, n_seg=n_seg, ladder=ladder)
        rows.append((float(tau), res.schedule, res.power, lub.P_avg))
    return rows


def lambda_sigma_sweep(params: EngineParams, schedule: Schedule, grid,
                       mode: str = "lindblad", ratio_ab_ba: float = 0.5,
                       noise_cfg: NoiseConfig | None = None):
    """Performance vs dephasing strength, by generator or by noise.

    ``grid`` holds the compression-stroke coefficients Lambda_ab; the
    expansion stroke uses Lambda_ba = Lambda_ab / ratio_ab_ba so the
    ratio is constant across the grid.  Noise mode converts each
    coefficient to its jitter width and runs a seeded ensemble.

    Rows: dicts with lambda_ab, sigma_ab, P, dS_rate, W_friction and
    (noise mode) the matching standard errors.
    """
    if noise_cfg is None:
        noise_cfg = NoiseConfig()
    n = noise_cfg.n_segments
    rows = []
    for lam_ab in np.asarray(grid, dtype=float):
        lam_ba = lam_ab / ratio_ab_ba
        sig_ab = sigma_for_lambda(lam_ab, schedule.tau_ab, n)
        sig_ba = sigma_for_lambda(lam_ba, schedule.tau_ba, n)
        point = replace(params, Lambda_ab=lam_ab, Lambda_ba=lam_ba)
        if mode == "lindblad":
            rec = run_cycle(point, schedule, n_seg=n, ladder="endpoint")
            rows.append({
                "lambda_ab": float(lam_ab), "sigma_ab": sig_ab,
                "P": rec.summary.P_avg,
                "dS_rate": rec.summary.dS_ext / rec.summary.tau,
                "W_friction": rec.summary.W_friction,
            })
        elif mode == "noise":
            cfg = replace(noise_cfg, sigma_ab=sig_ab, sigma_ba=sig_ba)
            mc = monte_carlo_cycle(params, schedule, cfg, kind="time")
            rows.append({
                "lambda_ab": float(lam_ab), "sigma_ab": sig_ab,
                "P": mc.mean.P_avg, "P_se": mc.se.P_avg,
                "dS_rate": mc.ds_rate_mean, "dS_rate_se": mc.ds_rate_se,
                "W_friction": mc.mean.W_friction,
                "W_friction_se": mc.se.W_friction,
            })
        else:
            raise ValueError("sweep mode must be 'lindblad' or 'noise' here")
    return rows


def expansion_work_trace(params: EngineParams, schedule: Schedule,
                         n_seg: int = 512, ladder: str = "midpoint"):
    """Accumulated (W_friction, W_field) along the expansion stroke.

    Starts from the limit cycle of the given parameter set; returns
    arrays (t, Omega(t), W_friction_cum, W_field_cum) plus the stroke
    totals, for friction-saturation plots.
    """
    from .cycle import branch_maps, cycle_map, limit_cycle
    from .thermo import power_field, power_friction

    maps = branch_maps(params, schedule, n_seg=n_seg, ladder=ladder)
    b_star = limit_cycle(cycle_map(*maps))
    b_in = maps[0].apply(b_star)
    ad = AdiabatParams(params.omega_b, params.omega_a, schedule.tau_ba,
                       params.Lambda_ba, n_seg, ladder)
    _, _, tr = adiabat_propagate(ad, params.J, b_in)
    pf = np.array([power_friction(om, tr.omega_dot, params.J, bb)
                   for om, bb in zip(tr.omega, tr.b)])
    pe = np.array([power_field(om, tr.omega_dot, params.J, bb)
                   for om, bb in zip(tr.omega, tr.b)])
    dt = np.diff(tr.t)
    wf = np.concatenate([[0.0], np.cumsum(0.5 * dt * (pf[1:] + pf[:-1]))])
    we = np.concatenate([[0.0], np.cumsum(0.5 * dt * (pe[1:] + pe[:-1]))])
    Om = np.hypot(tr.omega, params.J)
    totals = accumulate_works(tr)
    return tr.t, Om, wf, we, totals
