"""Pure-numpy implementations of the hot numeric kernels.

Same call signatures as :mod:`spinotto._kernels_numba`; selected through
:mod:`spinotto.backend`.  The closed form used everywhere: for a constant
field segment (omega, J) of duration dt with dephasing coefficient lam,
the map on (b1, b2, b3) is

    S = T^T D T,   T = frame rotation into the energy-aligned basis,
    D = diag-block(1, damped rotation by phi = sqrt(2)*Omega*dt),

with damping factor exp(-2*lam*Omega^2*dt) on the two coherence rows.
The remaining components (b4, b5) are untouched by drive-stroke dynamics.
"""

from __future__ import annotations

import numpy as np

SQRT2 = 2.0 ** 0.5


def segment_maps(omegas, dts, J, lam):
    """Vectorized 3x3 segment maps, shape (n, 3, 3), in time order."""
    omegas = np.asarray(omegas, dtype=float)
    dts = np.asarray(dts, dtype=float)
    Om = np.hypot(omegas, J)
    safe = np.where(Om > 0.0, Om, 1.0)
    c = np.where(Om > 0.0, omegas / safe, 1.0)
    s = np.where(Om > 0.0, J / safe, 0.0)
    phi = SQRT2 * Om * dts
    damp = np.exp(-2.0 * lam * Om * Om * np.abs(dts))
    cp = damp * np.cos(phi)
    sp = damp * np.sin(phi)
    out = np.empty(omegas.shape + (3, 3))
    cc, ss, cs = c * c, s * s, c * s
    out[..., 0, 0] = cc + ss * cp
    out[..., 0, 1] = cs - cs * cp
    out[..., 0, 2] = s * sp
    out[..., 1, 0] = cs - cs * cp
    out[..., 1, 1] = ss + cc * cp
    out[..., 1, 2] = -c * sp
    out[..., 2, 0] = -s * sp
    out[..., 2, 1] = c * sp
    out[..., 2, 2] = cp
    return out


def compose_adiabat_map(omegas, dts, J, lam):
    """Product S_n ... S_1 of the segment maps (rightmost acts first)."""
    mats = segment_maps(omegas, dts, J, lam)
    # pairwise tree reduction preserves the chain order
    while mats.shape[0] > 1:
        n = mats.shape[0]
        if n % 2:
            tail = mats[-1:]
            mats = np.concatenate([mats[1:-1:2] @ mats[:-1:2], tail])
        else:
            mats = mats[1::2] @ mats[::2]
    return np.ascontiguousarray(mats[0])


def adiabat_boundary_states(b3, omegas, dts, J, lam):
    """States at the n+1 segment boundaries, shape (n+1, 3)."""
    mats = segment_maps(omegas, dts, J, lam)
    n = mats.shape[0]
    out = np.empty((n + 1, 3))
    out[0] = b3
    cur = np.asarray(b3, dtype=float)
    for k in range(n):
        cur = mats[k] @ cur
        out[k + 1] = cur
    return out


def noisy_branch(states, om, dt, omega_start, omega_end, J):
    """Advance an ensemble through one noisy drive stroke, in place.

    states : (m, 5) b-vectors, om/dt : (m, n) per-trajectory ladders and
    segment durations.  Returns (W, W_fric) per trajectory; work is booked
    at the field jumps (the state is frozen while the field steps, and the
    energy is constant while the field holds).
    """
    m, n = dt.shape
    b1 = states[:, 0].copy()
    b2 = states[:, 1].copy()
    b3 = states[:, 2].copy()
    W = np.zeros(m)
    Wf = np.zeros(m)
    om_prev = np.full(m, float(omega_start))
    for k in range(n):
        om_k = om[:, k]
        dom = om_k - om_prev
        om_mid = 0.5 * (om_k + om_prev)
        W += dom * b1
        Wf += dom * J * (J * b1 - om_mid * b2) / (om_mid * om_mid + J * J)
        Om = np.hypot(om_k, J)
        c = om_k / Om
        s = J / Om
        bt1 = c * b1 + s * b2
        bt2 = -s * b1 + c * b2
        phi = SQRT2 * Om * dt[:, k]
        cp = np.cos(phi)
        sp = np.sin(phi)
        bt2n = cp * bt2 - sp * b3
        b3 = sp * bt2 + cp * b3
        b1 = c * bt1 - s * bt2n
        b2 = s * bt1 + c * bt2n
        om_prev = om_k
    dom = omega_end - om_prev
    if np.any(dom != 0.0):
        om_mid = 0.5 * (omega_end + om_prev)
        W += dom * b1
        Wf += dom * J * (J * b1 - om_mid * b2) / (om_mid * om_mid + J * J)
    states[:, 0] = b1
    states[:, 1] = b2
    states[:, 2] = b3
    return W, Wf


def mc_cycles(b_start, Mh, ch, Mc, cc, om_ba, dt_ba, om_ab, dt_ab,
              omega_b, omega_a, J, restart):
    """Run the full noisy four-stroke ensemble.

    Ladder arrays are (n_cycles, n_seg).  Returns (n_cycles, 6) columns
    (W_net, Q_h, Q_c, W_fric_ba, W_fric_ab, tau_ad_realized).  In restart
    mode all cycles start from ``b_start``; in continuous mode the state
    carries over so the chain is evaluated sequentially.
    """
    n_cyc = dt_ba.shape[0]
    out = np.empty((n_cyc, 6))
    if restart:
        _run_block(np.broadcast_to(b_start, (n_cyc, 5)).copy(), out,
                   Mh, ch, Mc, cc, om_ba, dt_ba, om_ab, dt_ab,
                   omega_b, omega_a, J)
        return out
    state = np.array([b_start])
    for i in range(n_cyc):
        _run_block(state, out[i:i + 1],
                   Mh, ch, Mc, cc, om_ba[i:i + 1], dt_ba[i:i + 1],
                   om_ab[i:i + 1], dt_ab[i:i + 1], omega_b, omega_a, J)
    return out


def _run_block(states, out, Mh, ch, Mc, cc, om_ba, dt_ba, om_ab, dt_ab,
               omega_b, omega_a, J):
    e_in = omega_b * states[:, 0] + J * states[:, 1]
    states[:] = states @ Mh.T + ch
    e_hot = omega_b * states[:, 0] + J * states[:, 1]
    q_h = e_hot - e_in

    w_ba, wf_ba = noisy_branch(states, om_ba, dt_ba, omega_b, omega_a, J)

    e_in = omega_a * states[:, 0] + J * states[:, 1]
    states[:] = states @ Mc.T + cc
    e_cold = omega_a * states[:, 0] + J * states[:, 1]
    q_c = e_cold - e_in

    w_ab, wf_ab = noisy_branch(states, om_ab, dt_ab, omega_a, omega_b, J)

    out[:, 0] = w_ba + w_ab
    out[:, 1] = q_h
    out[:, 2] = q_c
    out[:, 3] = wf_ba
    out[:, 4] = wf_ab
    out[:, 5] = dt_ba.sum(axis=1) + dt_ab.sum(axis=1)


def mean_adiabat_map(om, dt, J):
    """Ensemble mean of the per-trajectory stroke maps; om/dt are (m, n)."""
    m, n = dt.shape
    cur = np.broadcast_to(np.eye(3), (m, 3, 3)).copy()
    for k in range(n):
        cur = segment_maps(om[:, k], dt[:, k], J, 0.0) @ cur
    return cur.mean(axis=0)
