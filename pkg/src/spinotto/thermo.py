"""Thermodynamic observables of the engine.

Sign conventions, fixed once for the whole package:

* heats are medium-side: Q > 0 means energy absorbed by the working
  medium from the bath (so Q_c < 0 on a working engine),
* W is work done ON the medium, so W_net < 0 when the engine extracts
  work, and the average output power is -W_net / tau_cycle,
* per-cycle entropy production is -(Q_h/T_h + Q_c/T_c), which with
  medium-side heats is non-negative at every limit cycle.

The instantaneous power along a ramp, omega_dot * b1, splits into a
diagonal part (the cost of compressing the level structure) and an
off-diagonal part (the extra cost of driving at a finite rate):

    P_field    = Omega_dot * <H> / Omega
    P_friction = omega_dot * J * (J b1 - omega b2) / Omega^2

P_friction vanishes identically when J = 0, when the field is static, or
when the state is diagonal in the instantaneous energy basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import populations_from_b
from .errors import DegenerateScale, InvalidTemperature, NonPhysicalState


@dataclass(frozen=True)
class ThermoSample:
    """Instantaneous thermodynamic snapshot along a cycle."""

    t: float
    omega: float
    b: np.ndarray
    E: float
    P_field: float
    P_friction: float
    Qdot: float
    S_E: float
    S_vn: float


@dataclass(frozen=True)
class CycleSummary:
    """Per-cycle energy and entropy bookkeeping."""

    W_net: float
    W_friction: float
    W_field: float
    Q_h: float
    Q_c: float
    P_avg: float
    dS_ext: float
    tau: float


def energy(b: np.ndarray, omega: float, J: float) -> float:
    """<H> = omega*b1 + J*b2."""
    return float(omega * b[0] + J * b[1])


def power_field(omega: float, omega_dot: float, J: float,
                b: np.ndarray) -> float:
    """Diagonal (compression) part of the drive power, Omega_dot <H>/Omega."""
    Om2 = omega * omega + J * J
    if Om2 == 0.0:
        raise DegenerateScale("power split undefined at Omega = 0")
    return float(omega * omega_dot * (omega * b[0] + J * b[1]) / Om2)


def power_friction(omega: float, omega_dot: float, J: float,
                   b: np.ndarray) -> float:
    """Off-diagonal part of the drive power, the cost of finite-rate driving."""
    Om2 = omega * omega + J * J
    if Om2 == 0.0:
        raise DegenerateScale("power split undefined at Omega = 0")
    return float(omega_dot * J * (J * b[0] - omega * b[1]) / Om2)


def heat_flow(G: np.ndarray, g: np.ndarray, b: np.ndarray, omega: float,
              J: float) -> float:
    """Heat current <L_D(H)> of an isochore generator at state b.

    Works with the full affine generator: the unitary part contributes
    nothing to d<H>/dt and pure dephasing commutes with H, so what is
    left is exactly the bath exchange.
    """
    db = G @ np.asarray(b, dtype=float) + g
    return float(omega * db[0] + J * db[1])


def energy_entropy(b: np.ndarray, omega: float, J: float) -> float:
    """Shannon entropy of the populations in the H(omega, J) eigenbasis.

    The degenerate zero-energy pair is resolved through the spectral
    projector, so the result is basis independent.  Populations in
    [-1e-9, 0) are clamped to zero; anything lower raises
    NonPhysicalState.
    """
    p = populations_from_b(np.asarray(b, dtype=float), omega, J)
    if p.min() < -1e-9:
        raise NonPhysicalState(f"negative population {p.min():.3e}")
    p = np.clip(p, 0.0, 1.0)
    nz = p[p > 0.0]
    return float(-np.sum(nz * np.log(nz)))


def von_neumann_entropy(rho: np.ndarray) -> float:
    """-tr(rho ln rho) from the eigenvalues, with 0*ln(0) = 0."""
    evals = np.linalg.eigvalsh(rho)
    if evals.min() < -1e-9:
        raise NonPhysicalState(f"negative eigenvalue {evals.min():.3e}")
    evals = np.clip(evals.real, 0.0, 1.0)
    nz = evals[evals > 0.0]
    return float(-np.sum(nz * np.log(nz)))


def entropy_production(Q_h: float, Q_c: float, T_h: float,
                       T_c: float) -> float:
    """Per-cycle entropy dumped into the surroundings, -(Q_h/T_h + Q_c/T_c).

    Heats are medium-side (absorbed positive); at a limit cycle the value
    is the total irreversible entropy production and is >= 0.
    """
    if not (T_h > 0.0 and T_c > 0.0):
        raise InvalidTemperature("bath temperatures must be > 0")
    return float(-(Q_h / T_h + Q_c / T_c))


def accumulate_works(trace) -> tuple[float, float]:
    """Trapezoidal (W_friction, W_field) along a sampled drive stroke."""
    pf = np.array([power_friction(om, trace.omega_dot, trace.J, bb)
                   for om, bb in zip(trace.omega, trace.b)])
    pe = np.array([power_field(om, trace.omega_dot, trace.J, bb)
                   for om, bb in zip(trace.omega, trace.b)])
    return (float(np.trapezoid(pf, trace.t)),
            float(np.trapezoid(pe, trace.t)))


def quench_works(omega0: float, omega1: float, J: float,
                 b: np.ndarray) -> tuple[float, float, float]:
    """Exact (W_total, W_friction, W_field) of a sudden field jump.

    The state is frozen during the jump, so the split integrals have
    closed forms; used for zero-duration drive strokes.
    """
    w_tot = (omega1 - omega0) * float(b[0])
    if J == 0.0:
        return w_tot, 0.0, w_tot
    w_fric = (J * float(b[0]) * (np.arctan(omega1 / J) - np.arctan(omega0 / J))
              - 0.5 * J * float(b[1]) * np.log((omega1 * omega1 + J * J)
                                               / (omega0 * omega0 + J * J)))
    return w_tot, float(w_fric), w_tot - float(w_fric)
