"""Numba-compiled hot kernels; signatures mirror :mod:`_kernels_numpy`."""

from __future__ import annotations

import numpy as np
from numba import njit

SQRT2 = 2.0 ** 0.5


@njit(cache=True)
def _segment_map_into(out, omega, dt, J, lam):
    Om = np.hypot(omega, J)
    if Om > 0.0:
        c = omega / Om
        s = J / Om
    else:
        c = 1.0
        s = 0.0
    phi = SQRT2 * Om * dt
    damp = np.exp(-2.0 * lam * Om * Om * abs(dt))
    cp = damp * np.cos(phi)
    sp = damp * np.sin(phi)
    cc = c * c
    ss = s * s
    cs = c * s
    out[0, 0] = cc + ss * cp
    out[0, 1] = cs - cs * cp
    out[0, 2] = s * sp
    out[1, 0] = cs - cs * cp
    out[1, 1] = ss + cc * cp
    out[1, 2] = -c * sp
    out[2, 0] = -s * sp
    out[2, 1] = c * sp
    out[2, 2] = cp


def segment_maps(omegas, dts, J, lam):
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    dts = np.atleast_1d(np.asarray(dts, dtype=float))
    return _segment_maps(omegas, dts, float(J), float(lam))


@njit(cache=True)
def _segment_maps(omegas, dts, J, lam):
    n = omegas.shape[0]
    out = np.empty((n, 3, 3))
    for k in range(n):
        _segment_map_into(out[k], omegas[k], dts[k], J, lam)
    return out


def compose_adiabat_map(omegas, dts, J, lam):
    omegas = np.ascontiguousarray(omegas, dtype=float)
    dts = np.ascontiguousarray(dts, dtype=float)
    return _compose_adiabat_map(omegas, dts, float(J), float(lam))


@njit(cache=True)
def _compose_adiabat_map(omegas, dts, J, lam):
    n = omegas.shape[0]
    M = np.eye(3)
    S = np.empty((3, 3))
    T = np.empty((3, 3))
    for k in range(n):
        _segment_map_into(S, omegas[k], dts[k], J, lam)
        for i in range(3):
            for j in range(3):
                T[i, j] = (S[i, 0] * M[0, j] + S[i, 1] * M[1, j]
                           + S[i, 2] * M[2, j])
        M, T = T, M
    return M.copy()


def adiabat_boundary_states(b3, omegas, dts, J, lam):
    b3 = np.ascontiguousarray(b3, dtype=float)
    omegas = np.ascontiguousarray(omegas, dtype=float)
    dts = np.ascontiguousarray(dts, dtype=float)
    return _adiabat_boundary_states(b3, omegas, dts, float(J), float(lam))


@njit(cache=True)
def _adiabat_boundary_states(b3, omegas, dts, J, lam):
    n = omegas.shape[0]
    out = np.empty((n + 1, 3))
    out[0] = b3
    S = np.empty((3, 3))
    for k in range(n):
        _segment_map_into(S, omegas[k], dts[k], J, lam)
        out[k + 1] = S @ np.ascontiguousarray(out[k])
    return out


@njit(cache=True)
def _rotate_segment(b, omega, dt, J):
    """Rotate (b[0], b[1], b[2]) about the energy axis of (omega, J)."""
    Om = np.hypot(omega, J)
    c = omega / Om
    s = J / Om
    bt1 = c * b[0] + s * b[1]
    bt2 = -s * b[0] + c * b[1]
    phi = SQRT2 * Om * dt
    cp = np.cos(phi)
    sp = np.sin(phi)
    bt2n = cp * bt2 - sp * b[2]
    b[2] = sp * bt2 + cp * b[2]
    b[0] = c * bt1 - s * bt2n
    b[1] = s * bt1 + c * bt2n


@njit(cache=True)
def _noisy_branch_one(b, om, dt, omega_start, omega_end, J):
    n = om.shape[0]
    W = 0.0
    Wf = 0.0
    om_prev = omega_start
    for k in range(n):
        om_k = om[k]
        dom = om_k - om_prev
        om_mid = 0.5 * (om_k + om_prev)
        W += dom * b[0]
        Wf += dom * J * (J * b[0] - om_mid * b[1]) / (om_mid * om_mid + J * J)
        _rotate_segment(b, om_k, dt[k], J)
        om_prev = om_k
    dom = omega_end - om_prev
    if dom != 0.0:
        om_mid = 0.5 * (omega_end + om_prev)
        W += dom * b[0]
        Wf += dom * J * (J * b[0] - om_mid * b[1]) / (om_mid * om_mid + J * J)
    return W, Wf


def noisy_branch(states, om, dt, omega_start, omega_end, J):
    W = np.empty(states.shape[0])
    Wf = np.empty(states.shape[0])
    _noisy_branch_many(states, om, dt, float(omega_start), float(omega_end),
                       float(J), W, Wf)
    return W, Wf


@njit(cache=True)
def _noisy_branch_many(states, om, dt, omega_start, omega_end, J, W, Wf):
    for i in range(states.shape[0]):
        b = states[i, :3].copy()
        W[i], Wf[i] = _noisy_branch_one(b, om[i], dt[i],
                                        omega_start, omega_end, J)
        states[i, :3] = b


def mc_cycles(b_start, Mh, ch, Mc, cc, om_ba, dt_ba, om_ab, dt_ab,
              omega_b, omega_a, J, restart):
    return _mc_cycles(
        np.ascontiguousarray(b_start, dtype=float),
        np.ascontiguousarray(Mh), np.ascontiguousarray(ch),
        np.ascontiguousarray(Mc), np.ascontiguousarray(cc),
        np.ascontiguousarray(om_ba), np.ascontiguousarray(dt_ba),
        np.ascontiguousarray(om_ab), np.ascontiguousarray(dt_ab),
        float(omega_b), float(omega_a), float(J), bool(restart))


@njit(cache=True)
def _mc_cycles(b_start, Mh, ch, Mc, cc, om_ba, dt_ba, om_ab, dt_ab,
               omega_b, omega_a, J, restart):
    n_cyc = dt_ba.shape[0]
    out = np.empty((n_cyc, 6))
    state = b_start.copy()
    for i in range(n_cyc):
        if restart:
            state = b_start.copy()
        e_in = omega_b * state[0] + J * state[1]
        state = Mh @ state + ch
        q_h = omega_b * state[0] + J * state[1] - e_in

        b = state[:3].copy()
        w_ba, wf_ba = _noisy_branch_one(b, om_ba[i], dt_ba[i],
                                        omega_b, omega_a, J)
        state[:3] = b

        e_in = omega_a * state[0] + J * state[1]
        state = Mc @ state + cc
        q_c = omega_a * state[0] + J * state[1] - e_in

        b = state[:3].copy()
        w_ab, wf_ab = _noisy_branch_one(b, om_ab[i], dt_ab[i],
                                        omega_a, omega_b, J)
        state[:3] = b

        out[i, 0] = w_ba + w_ab
        out[i, 1] = q_h
        out[i, 2] = q_c
        out[i, 3] = wf_ba
        out[i, 4] = wf_ab
        out[i, 5] = dt_ba[i].sum() + dt_ab[i].sum()
    return out


def mean_adiabat_map(om, dt, J):
    return _mean_adiabat_map(np.ascontiguousarray(om),
                             np.ascontiguousarray(dt), float(J))


@njit(cache=True)
def _mean_adiabat_map(om, dt, J):
    m = dt.shape[0]
    acc = np.zeros((3, 3))
    S = np.empty((3, 3))
    for i in range(m):
        M = np.eye(3)
        for k in range(dt.shape[1]):
            _segment_map_into(S, om[i, k], dt[i, k], J, 0.0)
            M = S @ M
        acc += M
    return acc / m
