"""Operator algebra of the two-spin working medium.

The working medium is a pair of interacting spin-1/2 particles (Hilbert
space dimension 4).  Everything the engine needs is expressed through five
fixed Hermitian operators B1..B5 that are traceless and orthonormal under
the trace inner product and close under commutation with the Hamiltonian

    H = omega * B1 + J * B2 ,

where ``omega`` is the external control field and ``J`` the internal
coupling.  B1 is the collective z-polarization, B2/B3 the coupling
quadratures, B4 the polarization difference and B5 the zz-correlation.
Any state reachable by the engine is fully described by the five
expectation values b_k = <B_k>:

    rho = I/4 + sum_k b_k B_k .

Conventions used throughout the package:

* density matrices are complex ``(4, 4)`` ndarrays,
* b-vectors are float ``(5,)`` ndarrays ordered (b1, b2, b3, b4, b5),
* hbar = k_B = 1, all quantities dimensionless.

B3 is fixed by the commutation relation [B1, B2] = sqrt(2) i B3 (which the
numerical suite asserts to 1e-12); together with B1 and B2 it spans an
su(2)-like algebra scaled by sqrt(2).  B4 and B5 commute with H for every
(omega, J), so b4 and b5 are conserved on the drive strokes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidTemperature, NonPhysicalState

N_LEVELS = 4

_SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_SY = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
_SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
_I2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class OperatorSet:
    """The five Hermitian generators plus the identity, as dense 4x4 arrays."""

    B1: np.ndarray
    B2: np.ndarray
    B3: np.ndarray
    B4: np.ndarray
    B5: np.ndarray
    identity: np.ndarray

    def basis(self):
        """Return (B1..B5) as a tuple, in b-vector component order."""
        return (self.B1, self.B2, self.B3, self.B4, self.B5)


@lru_cache(maxsize=1)
def build_operator_set() -> OperatorSet:
    """Construct B1..B5 from Pauli tensor products.

    Normalizations: 2**-1.5 on B1..B4 and 1/2 on B5, which makes the set
    orthonormal, tr{B_k^dag B_j} = delta_kj.  B3 is the operator defined by
    [B1, B2] = sqrt(2) i B3, i.e. 2**-1.5 (sx x sy + sy x sx).
    """
    norm = 2.0 ** (-1.5)
    b1 = norm * (np.kron(_SZ, _I2) + np.kron(_I2, _SZ))
    b2 = norm * (np.kron(_SX, _SX) - np.kron(_SY, _SY))
    b3 = norm * (np.kron(_SX, _SY) + np.kron(_SY, _SX))
    b4 = norm * (np.kron(_SZ, _I2) - np.kron(_I2, _SZ))
    b5 = 0.5 * np.kron(_SZ, _SZ)
    return OperatorSet(b1, b2, b3, b4, b5, np.eye(4, dtype=complex))


@dataclass(frozen=True)
class Hamiltonian:
    """Instantaneous Hamiltonian omega*B1 + J*B2 with its energy scale."""

    omega: float
    J: float
    matrix: np.ndarray

    @property
    def Omega(self) -> float:
        """Instantaneous energy scale sqrt(omega^2 + J^2)."""
        return float(np.hypot(self.omega, self.J))


def hamiltonian(omega: float, J: float) -> Hamiltonian:
    """Build H = omega*B1 + J*B2.

    The spectrum is {+Omega/sqrt(2), 0, 0, -Omega/sqrt(2)} with
    Omega = sqrt(omega^2 + J^2).
    """
    ops = build_operator_set()
    return Hamiltonian(float(omega), float(J), omega * ops.B1 + J * ops.B2)


def energy_eigensystem(h: Hamiltonian):
    """Eigenvalues (descending) and orthonormal eigenvectors of a Hamiltonian.

    The returned eigenvectors follow a deterministic phase convention: the
    first component with modulus above 1e-12 is made real and positive.
    Within the doubly degenerate zero subspace only the spectral projector
    is basis independent; consumers must not rely on the individual pair.
    """
    evals, evecs = np.linalg.eigh(h.matrix)
    order = np.argsort(evals)[::-1]
    evals = evals[order]
    evecs = evecs[:, order]
    for i in range(evecs.shape[1]):
        col = evecs[:, i]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size:
            phase = col[nz[0]] / abs(col[nz[0]])
            evecs[:, i] = col / phase
    return evals, evecs


def state_from_b(b: np.ndarray) -> np.ndarray:
    """Reconstruct rho = I/4 + sum_k b_k B_k from the five expectations.

    Raises NonPhysicalState if the reconstruction has an eigenvalue below
    -1e-9, which signals that the caller produced an invalid b-vector.
    """
    b = np.asarray(b, dtype=float)
    ops = build_operator_set()
    rho = ops.identity / N_LEVELS
    for bk, Bk in zip(b, ops.basis()):
        rho = rho + bk * Bk
    lo = float(np.linalg.eigvalsh(rho)[0])
    if lo < -1e-9:
        raise NonPhysicalState(f"reconstructed state has eigenvalue {lo:.3e}")
    return rho


def b_from_state(rho: np.ndarray) -> np.ndarray:
    """Project a density matrix onto the operator basis, b_k = tr{rho B_k}.

    The components must come out real; an imaginary residue above 1e-10
    indicates a corrupted propagator and raises NonPhysicalState.
    """
    ops = build_operator_set()
    b = np.empty(5)
    for k, Bk in enumerate(ops.basis()):
        val = np.trace(rho @ Bk)
        if abs(val.imag) > 1e-10:
            raise NonPhysicalState(
                f"<B{k + 1}> has imaginary part {val.imag:.3e}"
            )
        b[k] = val.real
    return b


def check_density(rho: np.ndarray, atol: float = 1e-9) -> None:
    """Validate the density-matrix contract: Hermitian, unit trace, psd."""
    if not np.allclose(rho, rho.conj().T, atol=1e-10):
        raise NonPhysicalState("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-10:
        raise NonPhysicalState("density matrix trace differs from 1")
    lo = float(np.linalg.eigvalsh(rho)[0])
    if lo < -atol:
        raise NonPhysicalState(f"density matrix eigenvalue {lo:.3e} < 0")


def is_physical_b(b: np.ndarray, atol: float = 1e-9) -> bool:
    """True if the b-vector reconstructs to a positive semidefinite state."""
    try:
        state_from_b(np.asarray(b, dtype=float))
    except NonPhysicalState:
        return False
    return True


def gibbs_state(omega: float, J: float, T: float) -> np.ndarray:
    """Thermal state exp(-H/T)/Z for H = omega*B1 + J*B2.

    Computed through the eigendecomposition, so arbitrarily small T is
    handled without overflow (weights are shifted by the ground energy).
    """
    if not T > 0.0:
        raise InvalidTemperature(f"temperature must be > 0, got {T}")
    h = hamiltonian(omega, J)
    evals, evecs = energy_eigensystem(h)
    w = np.exp(-(evals - evals[-1]) / T)
    w /= w.sum()
    return (evecs * w) @ evecs.conj().T


def gibbs_b(omega: float, J: float, T: float) -> np.ndarray:
    """b-vector of the Gibbs state; the fixed point of the bath coupling."""
    return b_from_state(gibbs_state(omega, J, T))


def tilde_frame(omega: float, J: float) -> np.ndarray:
    """Orthogonal 5x5 change of basis into the instantaneous energy frame.

    Rotates (b1, b2) into (bt1, bt2) with bt1 = (omega*b1 + J*b2)/Omega the
    energy-aligned component and bt2 = (-J*b1 + omega*b2)/Omega the
    coherence quadrature; b3, b4, b5 are untouched.
    """
    Omega = float(np.hypot(omega, J))
    if Omega == 0.0:
        return np.eye(5)
    c, s = omega / Omega, J / Omega
    t = np.eye(5)
    t[0, 0] = c
    t[0, 1] = s
    t[1, 0] = -s
    t[1, 1] = c
    return t


def populations_from_b(b: np.ndarray, omega: float, J: float) -> np.ndarray:
    """Energy-basis populations (p_top, p_mid1, p_mid2, p_bottom) of rho(b).

    Degeneracy of the two zero-energy levels is resolved through the
    spectral projector: the returned middle pair are the eigenvalues of
    the projected block, which for algebra states are b4-split.
    """
    Omega = float(np.hypot(omega, J))
    if Omega == 0.0:
        bt1 = 0.0
    else:
        bt1 = (omega * b[0] + J * b[1]) / Omega
    r2 = 0.5 ** 0.5
    p_top = 0.25 + r2 * bt1 + 0.5 * b[4]
    p_bot = 0.25 - r2 * bt1 + 0.5 * b[4]
    p_mid_hi = 0.25 + r2 * abs(b[3]) - 0.5 * b[4]
    p_mid_lo = 0.25 - r2 * abs(b[3]) - 0.5 * b[4]
    return np.array([p_top, p_mid_hi, p_mid_lo, p_bot])
