"""Four-branch cycle assembly and the limit cycle.

Temporal order of one period, anchored at the start of the hot isochore:

    hot isochore (field omega_b)
    -> expansion ramp omega_b -> omega_a   ("ba" branch)
    -> cold isochore (field omega_a)
    -> compression ramp omega_a -> omega_b ("ab" branch)

Each branch is an affine map on the expectation 5-vector, so one period
is the composition U = U_ab @ U_c @ U_ba @ U_h and the limit cycle is the
unique fixed point b* = (I - M)^{-1} c whenever the composed linear part
contracts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import thermo
from .algebra import state_from_b
from .dynamics import (
    AdiabatParams,
    AffineMap,
    IsochoreParams,
    adiabat_propagate,
    isochore_propagator,
)
from .errors import NoContraction
from .thermo import CycleSummary

BRANCH_NAMES = ("hot", "ba", "cold", "ab")


@dataclass(frozen=True)
class Schedule:
    """Time allocations of the four branches."""

    tau_h: float
    tau_ba: float
    tau_c: float
    tau_ab: float

    def __post_init__(self):
        for name in ("tau_h", "tau_ba", "tau_c", "tau_ab"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")
        if not (self.tau_h > 0.0 and self.tau_c > 0.0):
            raise ValueError("both isochore times must be > 0")

    @property
    def tau_total(self) -> float:
        return self.tau_h + self.tau_ba + self.tau_c + self.tau_ab


@dataclass(frozen=True)
class EngineParams:
    """Full engine parameter set (working medium, baths, dephasing)."""

    J: float
    omega_a: float
    omega_b: float
    T_h: float
    T_c: float
    Gamma_h: float
    Gamma_c: float
    gamma_h: float = 0.0
    gamma_c: float = 0.0
    Lambda_ab: float = 0.0
    Lambda_ba: float = 0.0

    def __post_init__(self):
        if not (self.omega_b > self.omega_a > 0.0):
            raise ValueError("need omega_b > omega_a > 0")
        if not (self.T_h > self.T_c > 0.0):
            raise ValueError("need T_h > T_c > 0")
        for name in ("Gamma_h", "Gamma_c", "Lambda_ab", "Lambda_ba"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")

    def hot_isochore(self) -> IsochoreParams:
        return IsochoreParams(self.omega_b, self.T_h, self.Gamma_h,
                              self.gamma_h)

    def cold_isochore(self) -> IsochoreParams:
        return IsochoreParams(self.omega_a, self.T_c, self.Gamma_c,
                              self.gamma_c)


def branch_maps(params: EngineParams, schedule: Schedule,
                n_seg: int = 512, ladder: str = "midpoint"):
    """Affine maps (U_h, U_ab, U_c, U_ba) of the four branches.

    Zero-duration drive strokes give the identity map (the field jump
    does work but does not move the state).
    """
    from .dynamics import adiabat_map

    u_h = isochore_propagator(params.hot_isochore(), params.J).affine(schedule.tau_h)
    u_c = isochore_propagator(params.cold_isochore(), params.J).affine(schedule.tau_c)
    if schedule.tau_ba > 0.0:
        u_ba = adiabat_map(AdiabatParams(params.omega_b, params.omega_a,
                                         schedule.tau_ba, params.Lambda_ba,
                                         n_seg, ladder), params.J)
    else:
        u_ba = AffineMap.identity()
    if schedule.tau_ab > 0.0:
        u_ab = adiabat_map(AdiabatParams(params.omega_a, params.omega_b,
                                         schedule.tau_ab, params.Lambda_ab,
                                         n_seg, ladder), params.J)
    else:
        u_ab = AffineMap.identity()
    return u_h, u_ab, u_c, u_ba


def cycle_map(u_h: AffineMap, u_ab: AffineMap, u_c: AffineMap,
              u_ba: AffineMap) -> AffineMap:
    """One-period map in temporal order hot -> ba -> cold -> ab."""
    return u_ab @ u_c @ u_ba @ u_h


def limit_cycle(u: AffineMap) -> np.ndarray:
    """Fixed point b* = (I - M)^{-1} c of the one-period map.

    Raises NoContraction when the spectral radius of M is not strictly
    below one (an all-unitary cycle has no unique periodic state).
    """
    radius = float(np.abs(np.linalg.eigvals(u.M)).max())
    if radius >= 1.0 - 1e-12:
        raise NoContraction(f"cycle map spectral radius {radius:.12f} >= 1")
    return np.linalg.solve(np.eye(5) - u.M, u.c)


def limit_cycle_iterated(u: AffineMap, b0: np.ndarray, tol: float = 1e-13,
                         max_iter: int = 100_000) -> np.ndarray:
    """Fixed point by plain iteration; cross-check for the direct solve."""
    b = np.asarray(b0, dtype=float)
    for _ in range(max_iter):
        nxt = u.apply(b)
        if np.max(np.abs(nxt - b)) < tol:
            return nxt
        b = nxt
    raise NoContraction("fixed-point iteration did not converge")


@dataclass(frozen=True)
class CycleRecord:
    """Sampled limit cycle: per-sample arrays plus the period summary."""

    t: np.ndarray
    omega: np.ndarray
    b: np.ndarray            # (n, 5)
    E: np.ndarray
    P_field: np.ndarray
    P_friction: np.ndarray
    Qdot: np.ndarray
    S_E: np.ndarray
    S_vn: np.ndarray
    branch: np.ndarray       # per-sample branch name
    branch_bounds: tuple     # indices where each branch starts
    summary: CycleSummary
    b_anchor: np.ndarray

    def samples(self):
        """Row view of the record as ThermoSample values."""
        for i in range(len(self.t)):
            yield thermo.ThermoSample(
                t=float(self.t[i]), omega=float(self.omega[i]),
                b=self.b[i], E=float(self.E[i]),
                P_field=float(self.P_field[i]),
                P_friction=float(self.P_friction[i]),
                Qdot=float(self.Qdot[i]), S_E=float(self.S_E[i]),
                S_vn=float(self.S_vn[i]))


def run_cycle(params: EngineParams, schedule: Schedule,
              resolution: int = 200, n_seg: int = 512,
              ladder: str = "midpoint") -> CycleRecord:
    """Sample one full period at the limit cycle.

    ``resolution`` samples per branch go into the record; the drive
    strokes are integrated at ``n_seg`` segments regardless, so output
    size and accuracy are decoupled.
    """
    u_h, u_ab, u_c, u_ba = branch_maps(params, schedule, n_seg, ladder)
    b_star = limit_cycle(cycle_map(u_h, u_ab, u_c, u_ba))

    iso_h = isochore_propagator(params.hot_isochore(), params.J)
    iso_c = isochore_propagator(params.cold_isochore(), params.J)

    ts, oms, bs, qdots, pfs, pfrs, names, bounds = [], [], [], [], [], [], [], []
    t0 = 0.0
    b = b_star.copy()
    w_fric_total = 0.0
    w_net = 0.0
    heats = {}

    for name in BRANCH_NAMES:
        bounds.append(len(ts))
        if name == "hot":
            tau, prop, om_br = schedule.tau_h, iso_h, params.omega_b
        elif name == "cold":
            tau, prop, om_br = schedule.tau_c, iso_c, params.omega_a
        else:
            tau = schedule.tau_ba if name == "ba" else schedule.tau_ab
            om0 = params.omega_b if name == "ba" else params.omega_a
            om1 = params.omega_a if name == "ba" else params.omega_b

        if name in ("hot", "cold"):
            e0 = thermo.energy(b, om_br, params.J)
            step = prop.affine(tau / resolution)
            cur = b.copy()
            for i in range(resolution):
                ts.append(t0 + i * tau / resolution)
                oms.append(om_br)
                bs.append(cur.copy())
                qdots.append(thermo.heat_flow(prop.G, prop.g, cur, om_br,
                                              params.J))
                pfs.append(0.0)
                pfrs.append(0.0)
                names.append(name)
                cur = step.apply(cur)
            b = prop.affine(tau).apply(b)
            heats[name] = thermo.energy(b, om_br, params.J) - e0
            t0 += tau
        else:
            lam = params.Lambda_ba if name == "ba" else params.Lambda_ab
            if tau > 0.0:
                ad = AdiabatParams(om0, om1, tau, lam, n_seg, ladder)
                b_end, _, tr = adiabat_propagate(ad, params.J, b)
                w_fric, _ = thermo.accumulate_works(tr)
                w_branch = (thermo.energy(b_end, om1, params.J)
                            - thermo.energy(b, om0, params.J))
                stride = max(1, n_seg // resolution)
                for i in range(0, n_seg, stride):
                    ts.append(t0 + tr.t[i])
                    oms.append(tr.omega[i])
                    bs.append(tr.b[i].copy())
                    qdots.append(0.0)
                    pfs.append(thermo.power_field(tr.omega[i], tr.omega_dot,
                                                  params.J, tr.b[i]))
                    pfrs.append(thermo.power_friction(tr.omega[i],
                                                      tr.omega_dot,
                                                      params.J, tr.b[i]))
                    names.append(name)
                b = b_end
            else:
                w_branch, w_fric, _ = thermo.quench_works(om0, om1, params.J, b)
                ts.append(t0)
                oms.append(om0)
                bs.append(b.copy())
                qdots.append(0.0)
                pfs.append(0.0)
                pfrs.append(0.0)
                names.append(name)
            w_net += w_branch
            w_fric_total += w_fric
            t0 += tau

    # close the period with the return to the anchor point
    ts.append(schedule.tau_total)
    oms.append(params.omega_b)
    bs.append(b.copy())
    qdots.append(0.0)
    pfs.append(0.0)
    pfrs.append(0.0)
    names.append("ab")

    t = np.array(ts)
    om = np.array(oms)
    barr = np.array(bs)
    e = om * barr[:, 0] + params.J * barr[:, 1]
    s_e = np.array([thermo.energy_entropy(bb, o, params.J)
                    for bb, o in zip(barr, om)])
    s_vn = np.array([thermo.von_neumann_entropy(state_from_b(bb))
                     for bb in barr])

    q_h, q_c = heats["hot"], heats["cold"]
    summary = CycleSummary(
        W_net=w_net,
        W_friction=w_fric_total,
        W_field=w_net - w_fric_total,
        Q_h=q_h,
        Q_c=q_c,
        P_avg=-w_net / schedule.tau_total,
        dS_ext=thermo.entropy_production(q_h, q_c, params.T_h, params.T_c),
        tau=schedule.tau_total,
    )
    return CycleRecord(t, om, barr, e, np.array(pfs), np.array(pfrs),
                       np.array(qdots), s_e, s_vn, np.array(names),
                       tuple(bounds), summary, b_star)


def cycle_power(params: EngineParams, schedule: Schedule, n_seg: int = 512,
                ladder: str = "midpoint"):
    """Fast path: limit-cycle summary without the sampled record.

    Heats come from the exact branch-boundary energies, works from the
    drive-stroke energy differences, so the first law closes to solver
    precision.  W_friction is not computed here (run_cycle provides it).
    """
    u_h, u_ab, u_c, u_ba = branch_maps(params, schedule, n_seg, ladder)
    b0 = limit_cycle(cycle_map(u_h, u_ab, u_c, u_ba))
    b1 = u_h.apply(b0)
    b2 = u_ba.apply(b1)
    b3 = u_c.apply(b2)
    b4 = u_ab.apply(b3)
    J = params.J
    q_h = thermo.energy(b1, params.omega_b, J) - thermo.energy(b0, params.omega_b, J)
    w_ba = thermo.energy(b2, params.omega_a, J) - thermo.energy(b1, params.omega_b, J)
    q_c = thermo.energy(b3, params.omega_a, J) - thermo.energy(b2, params.omega_a, J)
    w_ab = thermo.energy(b4, params.omega_b, J) - thermo.energy(b3, params.omega_a, J)
    w_net = w_ba + w_ab
    ds = thermo.entropy_production(q_h, q_c, params.T_h, params.T_c)
    return CycleSummary(w_net, np.nan, np.nan, q_h, q_c,
                        -w_net / schedule.tau_total, ds, schedule.tau_total), b0
