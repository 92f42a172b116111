"""Branch generators and exact propagators.

Two kinds of stroke are needed.  On the *isochores* the field is constant
and the medium relaxes toward the Gibbs state of H(omega, J) through a
completely positive generator with detailed balance, plus an optional
elastic (pure-dephasing) term -gamma*[H,[H,rho]].  On the *adiabats* the
field ramps linearly and the motion is unitary, optionally augmented with
a dephasing double commutator -Lambda*[H,[H,rho]].

Every generator maps the operator span {I, B1..B5} into itself, so each
stroke acts on the expectation 5-vector b as an affine map b -> M b + c.
Isochore maps are exact exponentials of the affine generator; adiabat
maps are products of exact constant-field segment maps over a
piecewise-constant sampling of the ramp (midpoint rule by default).

Thermal dissipator construction: in the instantaneous energy basis
(levels +E, 0, 0, -E with E = Omega/sqrt(2)) a lowering jump |j><i| is
attached to both single-gap pairs (top <-> zero subspace <-> bottom) with
a common base rate, the raising partners carry the detailed-balance
factor exp(-gap/T), and the zero-subspace jumps are summed over an
orthonormal pair so only spectral projectors enter.  The base rate is
normalized so the slowest population-relaxation eigenvalue equals Gamma;
this makes the coherence decay rate equal to Gamma as well (T2 = T1
exactly when gamma = 0).  The direct double-gap jump is given zero weight
because any nonzero weight breaks that identity.

The pure-dephasing coefficient is used as |gamma|: a negative input is
accepted (and should be recorded by callers) but a dephasing rate must be
non-negative for complete positivity.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from . import backend
from .algebra import (
    build_operator_set,
    energy_eigensystem,
    hamiltonian,
    populations_from_b,
)
from .errors import DegenerateScale, InvalidTemperature, NonPhysicalState

DEFAULT_N_SEG = 512


@dataclass(frozen=True)
class IsochoreParams:
    """Constant-field bath-coupled stroke parameters."""

    omega: float
    T: float
    Gamma: float
    gamma: float = 0.0

    def __post_init__(self):
        if not self.T > 0.0:
            raise InvalidTemperature(f"bath temperature must be > 0, got {self.T}")
        if self.Gamma < 0.0:
            raise ValueError(f"Gamma must be >= 0, got {self.Gamma}")


@dataclass(frozen=True)
class AdiabatParams:
    """Linear-ramp stroke parameters with optional dephasing."""

    omega_start: float
    omega_end: float
    tau: float
    Lambda: float = 0.0
    n_seg: int = DEFAULT_N_SEG
    ladder: str = "midpoint"

    def __post_init__(self):
        if not self.tau > 0.0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if self.Lambda < 0.0:
            raise ValueError(f"Lambda must be >= 0, got {self.Lambda}")
        if self.n_seg < 1:
            raise ValueError(f"n_seg must be >= 1, got {self.n_seg}")
        if self.ladder not in ("midpoint", "endpoint"):
            raise ValueError(f"unknown ladder {self.ladder!r}")


@dataclass(frozen=True)
class AffineMap:
    """Affine action b -> M b + c on the expectation 5-vector."""

    M: np.ndarray
    c: np.ndarray

    @classmethod
    def identity(cls) -> "AffineMap":
        return cls(np.eye(5), np.zeros(5))

    def apply(self, b: np.ndarray) -> np.ndarray:
        return self.M @ np.asarray(b, dtype=float) + self.c

    def __matmul__(self, inner: "AffineMap") -> "AffineMap":
        """Composition: (self @ inner)(b) = self(inner(b))."""
        return AffineMap(self.M @ inner.M, self.M @ inner.c + self.c)


def segment_ladder(omega_start: float, omega_end: float, n_seg: int,
                   kind: str = "midpoint") -> np.ndarray:
    """Constant-field values for the piecewise sampling of a linear ramp.

    ``midpoint``: field at the middle of each of the n equal segments
    (second-order accurate).  ``endpoint``: omega_k at the segment right
    ends, k/n of the way along the ramp for k = 1..n.
    """
    k = np.arange(1, n_seg + 1, dtype=float)
    span = omega_end - omega_start
    if kind == "midpoint":
        return omega_start + span * (k - 0.5) / n_seg
    if kind == "endpoint":
        return omega_start + span * k / n_seg
    raise ValueError(f"unknown ladder {kind!r}")


def adiabat_map(params: AdiabatParams, J: float) -> AffineMap:
    """Exact affine map of one drive stroke (offset is zero; b4, b5 fixed)."""
    omegas = segment_ladder(params.omega_start, params.omega_end,
                            params.n_seg, params.ladder)
    dts = np.full(params.n_seg, params.tau / params.n_seg)
    m3 = backend.compose_adiabat_map(omegas, dts, J, params.Lambda)
    M = np.eye(5)
    M[:3, :3] = m3
    return AffineMap(M, np.zeros(5))


@dataclass(frozen=True)
class AdiabatTrace:
    """Sampled path along a drive stroke (segment boundaries)."""

    t: np.ndarray
    omega: np.ndarray
    omega_dot: float
    b: np.ndarray  # (n+1, 5)
    J: float


def adiabat_propagate(params: AdiabatParams, J: float, b0: np.ndarray):
    """Propagate b0 through the ramp; returns (b_final, AffineMap, trace).

    Positivity is spot-checked at ~32 points along the path; a violation
    beyond 1e-8 indicates an integration bug upstream and raises
    NonPhysicalState.
    """
    b0 = np.asarray(b0, dtype=float)
    omegas = segment_ladder(params.omega_start, params.omega_end,
                            params.n_seg, params.ladder)
    dts = np.full(params.n_seg, params.tau / params.n_seg)
    path3 = backend.adiabat_boundary_states(b0[:3], omegas, dts, J,
                                            params.Lambda)
    n = params.n_seg
    t = np.linspace(0.0, params.tau, n + 1)
    omega_path = params.omega_start + (params.omega_end - params.omega_start) * t / params.tau
    b_path = np.empty((n + 1, 5))
    b_path[:, :3] = path3
    b_path[:, 3] = b0[3]
    b_path[:, 4] = b0[4]

    pops = np.array([populations_from_b(b_path[i], omega_path[i], J)
                     for i in range(0, n + 1, max(1, n // 32))])
    if pops.min() < -1e-8:
        raise NonPhysicalState(
            f"drive-stroke state left positivity by {pops.min():.3e}"
        )

    m3 = backend.compose_adiabat_map(omegas, dts, J, params.Lambda)
    M = np.eye(5)
    M[:3, :3] = m3
    amap = AffineMap(M, np.zeros(5))
    trace = AdiabatTrace(t, omega_path,
                         (params.omega_end - params.omega_start) / params.tau,
                         b_path, J)
    return b_path[-1].copy(), amap, trace


# ---------------------------------------------------------------------------
# Isochore generator: Lindblad pieces on rho, projected onto the algebra
# ---------------------------------------------------------------------------

def thermal_jump_operators(omega: float, J: float, T: float, Gamma: float):
    """Gap-resolved jump operators (op, rate) in the energy eigenbasis."""
    if not T > 0.0:
        raise InvalidTemperature(f"bath temperature must be > 0, got {T}")
    if Gamma == 0.0:
        return []
    evals, evecs = energy_eigensystem(hamiltonian(omega, J))
    gap = evals[0] - evals[1]
    if gap < 1e-12:
        return []
    x = float(np.exp(-gap / T))
    k_dn = Gamma / (1.0 + x)
    top = evecs[:, 0]
    bot = evecs[:, 3]
    ops = []
    for mid in (evecs[:, 1], evecs[:, 2]):
        ops.append((np.outer(mid, top.conj()), k_dn))        # top -> zero
        ops.append((np.outer(top, mid.conj()), k_dn * x))    # zero -> top
        ops.append((np.outer(bot, mid.conj()), k_dn))        # zero -> bottom
        ops.append((np.outer(mid, bot.conj()), k_dn * x))    # bottom -> zero
    return ops


def liouvillian_action(omega: float, J: float, T: float, Gamma: float,
                       gamma: float):
    """Return rho -> drho/dt for the full isochore generator."""
    h = hamiltonian(omega, J).matrix
    jumps = thermal_jump_operators(omega, J, T, Gamma)
    g_pd = abs(gamma)

    def apply(rho: np.ndarray) -> np.ndarray:
        out = -1j * (h @ rho - rho @ h)
        for L, rate in jumps:
            Ld = L.conj().T
            anti = Ld @ L
            out = out + rate * (L @ rho @ Ld
                                - 0.5 * (anti @ rho + rho @ anti))
        if g_pd:
            inner = h @ rho - rho @ h
            out = out - g_pd * (h @ inner - inner @ h)
        return out

    return apply


def project_generator(apply_fn):
    """Project a superoperator onto the algebra: (G, g) with db/dt = G b + g.

    Columns come from the images of the basis operators; the offset from
    the image of I/4.  Closure of the algebra under the generator is a
    tested property (see the closure_residual helper), not an assumption.
    """
    ops = build_operator_set()
    basis = ops.basis()
    G = np.empty((5, 5))
    g = np.empty(5)
    img0 = apply_fn(ops.identity / 4.0)
    for j, Bj in enumerate(basis):
        g[j] = np.trace(Bj @ img0).real
    for k, Bk in enumerate(basis):
        img = apply_fn(Bk.astype(complex))
        for j, Bj in enumerate(basis):
            G[j, k] = np.trace(Bj @ img).real
    return G, g


def closure_residual(apply_fn) -> float:
    """Largest norm left over after projecting generator images back."""
    ops = build_operator_set()
    basis = ops.basis()
    worst = 0.0
    for X in (ops.identity / 4.0,) + basis:
        img = apply_fn(X.astype(complex))
        recon = np.trace(img).real / 4.0 * ops.identity
        for Bj in basis:
            recon = recon + np.trace(Bj @ img).real * Bj
        worst = max(worst, float(np.abs(img - recon).max()))
    return worst


def isochore_generator(params: IsochoreParams, J: float):
    """Affine generator (G, g) of the bath-coupled stroke.

    The fixed point of db/dt = G b + g is the Gibbs b-vector of
    H(omega, J) at the bath temperature.
    """
    apply_fn = liouvillian_action(params.omega, J, params.T, params.Gamma,
                                  params.gamma)
    return project_generator(apply_fn)


class IsochorePropagator:
    """Exact affine exponentials exp(tau * (G, g)) for one isochore.

    The 6x6 embedding [[G, g], [0, 0]] is eigendecomposed once so maps at
    many durations are cheap; falls back to a direct expm if the
    eigenbasis is ill-conditioned.
    """

    def __init__(self, params: IsochoreParams, J: float):
        self.params = params
        self.J = J
        G, g = isochore_generator(params, J)
        self.G = G
        self.g = g
        A = np.zeros((6, 6))
        A[:5, :5] = G
        A[:5, 5] = g
        self._A = A
        w, V = np.linalg.eig(A)
        cond = np.linalg.cond(V)
        if cond < 1e8:
            self._eig = (w, V, np.linalg.inv(V))
        else:
            self._eig = None

    def affine(self, tau: float) -> AffineMap:
        if tau < 0.0:
            raise ValueError(f"tau must be >= 0, got {tau}")
        if tau == 0.0:
            return AffineMap.identity()
        if self._eig is not None:
            w, V, Vinv = self._eig
            E = (V * np.exp(w * tau)) @ Vinv
            E = E.real
        else:
            E = expm(self._A * tau)
        return AffineMap(np.ascontiguousarray(E[:5, :5]),
                         np.ascontiguousarray(E[:5, 5]))


@lru_cache(maxsize=128)
def isochore_propagator(params: IsochoreParams, J: float) -> IsochorePropagator:
    """Cached propagator factory; params are frozen so reuse is safe."""
    return IsochorePropagator(params, J)


def isochore_propagate(params: IsochoreParams, J: float, tau: float,
                       b0: np.ndarray, n_samples: int = 0):
    """Relax b0 for a duration tau; returns (b_final, AffineMap, trace).

    trace is None unless n_samples > 0, in which case the exact state at
    n_samples+1 uniform times is returned as (t, b) arrays.
    """
    prop = isochore_propagator(params, J)
    amap = prop.affine(tau)
    b0 = np.asarray(b0, dtype=float)
    trace = None
    if n_samples > 0:
        step = prop.affine(tau / n_samples)
        t = np.linspace(0.0, tau, n_samples + 1)
        bs = np.empty((n_samples + 1, 5))
        bs[0] = b0
        for i in range(n_samples):
            bs[i + 1] = step.apply(bs[i])
        trace = (t, bs)
    return amap.apply(b0), amap, trace


def dephasing_times(params: IsochoreParams, J: float):
    """Characteristic times (T1, T2, T2_star) of the isochore generator.

    T1 is the energy equilibration time 1/Gamma.  T2 is read off the
    complex eigenvalue pair of the generator that carries the coherence
    oscillation at sqrt(2)*Omega; with gamma = 0 it coincides with T1.
    T2_star = 1/(2*|gamma|*Omega^2) is the pure-dephasing time alone.
    """
    if params.Gamma == 0.0 and params.gamma == 0.0:
        raise ZeroDivisionError("both Gamma and gamma are zero; no "
                                "dephasing timescale is defined")
    Omega = float(np.hypot(params.omega, J))
    if Omega == 0.0:
        raise DegenerateScale("dephasing times need Omega > 0")
    G, _ = isochore_generator(params, J)
    w = np.linalg.eigvals(G)
    osc = w[np.abs(w.imag) > 1e-9 * Omega]
    if osc.size == 0:
        raise DegenerateScale("no coherence eigenvalue pair found")
    t2 = 1.0 / float(-osc.real.max())
    t1 = 1.0 / params.Gamma if params.Gamma > 0.0 else np.inf
    g_pd = abs(params.gamma)
    t2_star = 1.0 / (2.0 * g_pd * Omega * Omega) if g_pd > 0.0 else np.inf
    return t1, t2, t2_star
