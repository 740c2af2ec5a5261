"""Compiled inner loops for the rod right-hand side and the spatial integrators.

The node state is the 19-vector ``[p(3), h(4), n(3), m(3), q(3), w(3)]`` and
the history row is the 12-vector ``[q_h, w_h, v_h, u_h]``. Everything here
mirrors :func:`softrod.dynamics.ode_rhs`, which is the readable reference.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

STATE_DIM = 19
HIST_DIM = 12


@njit(cache=True)
def _cross(a, b, out):
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]


@njit(cache=True)
def _rotation(h, R):
    h1, h2, h3, h4 = h[0], h[1], h[2], h[3]
    k = 2.0 / (h1 * h1 + h2 * h2 + h3 * h3 + h4 * h4)
    R[0, 0] = 1.0 - k * (h3 * h3 + h4 * h4)
    R[0, 1] = k * (h2 * h3 - h4 * h1)
    R[0, 2] = k * (h2 * h4 + h3 * h1)
    R[1, 0] = k * (h2 * h3 + h4 * h1)
    R[1, 1] = 1.0 - k * (h2 * h2 + h4 * h4)
    R[1, 2] = k * (h3 * h4 - h2 * h1)
    R[2, 0] = k * (h2 * h4 - h3 * h1)
    R[2, 1] = k * (h3 * h4 + h2 * h1)
    R[2, 2] = 1.0 - k * (h2 * h2 + h3 * h3)


@njit(cache=True)
def _matvec(A, x, out):
    for i in range(3):
        out[i] = A[i, 0] * x[0] + A[i, 1] * x[1] + A[i, 2] * x[2]


@njit(cache=True)
def _matTvec(A, x, out):
    for i in range(3):
        out[i] = A[0, i] * x[0] + A[1, i] * x[1] + A[2, i] * x[2]


@njit(cache=True)
def rod_rhs(y, hist, c0, K_se_inv, K_bt_inv, v_star, u_star, rho_a, rho_j, f_sum, f_moment,
            f_dist, l_dist, g_dist, d_na, dy, strain):
    """Arclength derivative ``dy`` of the node state; also writes ``strain = [v, u]``."""
    R = np.empty((3, 3))
    _rotation(y[3:7], R)
    n = y[7:10]
    m = y[10:13]
    q = y[13:16]
    w = y[16:19]
    qh = hist[0:3]
    wh = hist[3:6]
    vh = hist[6:9]
    uh = hist[9:12]

    loc = np.empty(3)
    v = np.empty(3)
    u = np.empty(3)
    _matTvec(R, n, loc)
    _matvec(K_se_inv, loc, v)
    _matTvec(R, m, loc)
    _matvec(K_bt_inv, loc, u)
    for i in range(3):
        v[i] += v_star[i]
        u[i] += u_star[i]
        strain[i] = v[i]
        strain[3 + i] = u[i]

    ps = np.empty(3)
    _matvec(R, v, ps)
    dy[0:3] = ps

    h1, h2, h3, h4 = y[3], y[4], y[5], y[6]
    u1, u2, u3 = u[0], u[1], u[2]
    dy[3] = 0.5 * (-u1 * h2 - u2 * h3 - u3 * h4)
    dy[4] = 0.5 * (u1 * h1 + u3 * h3 - u2 * h4)
    dy[5] = 0.5 * (u2 * h1 - u3 * h2 + u1 * h4)
    dy[6] = 0.5 * (u3 * h1 + u2 * h2 - u1 * h3)

    tmp = np.empty(3)
    acc = np.empty(3)
    # force balance: linear momentum and the pressure follower term
    _cross(w, q, tmp)
    for i in range(3):
        acc[i] = rho_a * (tmp[i] + c0 * q[i] + qh[i])
    acc[0] += f_sum * u2
    acc[1] -= f_sum * u1
    _matvec(R, acc, tmp)
    for i in range(3):
        dy[7 + i] = -f_dist[i] + tmp[i]

    # moment balance
    jw = np.empty(3)
    jwh = np.empty(3)
    _matvec(rho_j, w, jw)
    _matvec(rho_j, wh, jwh)
    _cross(w, jw, acc)
    for i in range(3):
        acc[i] += c0 * jw[i] + jwh[i]
    # sum_i F_i [(v + u x r_i) x e3 + r_i x (u x e3)] with f_moment = sum_i F_i r_i
    uxc = np.empty(3)
    _cross(u, f_moment, uxc)
    acc[0] += f_sum * v[1] + uxc[1]
    acc[1] += -f_sum * v[0] - uxc[0]
    uxe = np.empty(3)
    uxe[0] = u2
    uxe[1] = -u1
    uxe[2] = 0.0
    _cross(f_moment, uxe, tmp)
    for i in range(3):
        acc[i] += tmp[i]
    _matvec(R, acc, tmp)
    arm = np.empty(3)
    _matvec(R, d_na, arm)
    cg = np.empty(3)
    _cross(arm, g_dist, cg)
    pxn = np.empty(3)
    _cross(ps, n, pxn)
    for i in range(3):
        dy[10 + i] = -l_dist[i] + cg[i] - pxn[i] + tmp[i]

    # velocity compatibility
    _cross(w, v, tmp)
    _cross(u, q, acc)
    for i in range(3):
        dy[13 + i] = tmp[i] + c0 * v[i] + vh[i] - acc[i]
    _cross(w, u, tmp)
    for i in range(3):
        dy[16 + i] = c0 * u[i] + uh[i] + tmp[i]


@njit(cache=True)
def _exceeds(y, bound):
    for i in range(y.shape[0]):
        if not (abs(y[i]) <= bound):
            return True
    return False


@njit(cache=True)
def _renormalize(y):
    nrm = math.sqrt(y[3] * y[3] + y[4] * y[4] + y[5] * y[5] + y[6] * y[6])
    for i in range(3, 7):
        y[i] /= nrm


@njit(cache=True)
def _record(y, strain, row):
    for i in range(6):
        row[i] = y[13 + i]
    for i in range(6):
        row[6 + i] = strain[i]


@njit(cache=True)
def integrate_rod(y0, s, rk4, hist, c0, K_se_inv, K_bt_inv, v_star, u_star, rho_a, rho_j, f_sum,
                  f_moment, f_dist, l_dist, g_dist, d_na, bound, Y, S, Z):
    """March the node state from ``s[0]`` to ``s[-1]``.

    ``hist`` and ``Z`` use the history layout: rows ``0..N-1`` are the nodes
    and, for RK4, three more blocks of ``N-1`` rows hold the second, third and
    fourth stage of each interval. ``Z`` receives the fields ``[q, w, v, u]``
    actually evaluated at every one of those points, so that a later time step
    sees exactly consistent history. Fills ``Y`` (N x 19) and ``S`` (N x 6).
    Returns -1 on success or the index of the first node whose state is
    non-finite or exceeds ``bound``.
    """
    N = s.shape[0]
    M = N - 1
    Y[0, :] = y0
    _renormalize(Y[0])
    if _exceeds(Y[0], bound):
        return 0
    k1 = np.empty(STATE_DIM)
    k2 = np.empty(STATE_DIM)
    k3 = np.empty(STATE_DIM)
    k4 = np.empty(STATE_DIM)
    yt = np.empty(STATE_DIM)
    scratch = np.empty(6)
    for j in range(M):
        ds = s[j + 1] - s[j]
        rod_rhs(Y[j], hist[j], c0, K_se_inv, K_bt_inv, v_star, u_star, rho_a, rho_j, f_sum,
                f_moment, f_dist, l_dist, g_dist, d_na, k1, S[j])
        _record(Y[j], S[j], Z[j])
        if rk4:
            for i in range(STATE_DIM):
                yt[i] = Y[j, i] + 0.5 * ds * k1[i]
            rod_rhs(yt, hist[N + j], c0, K_se_inv, K_bt_inv, v_star, u_star, rho_a, rho_j, f_sum,
                    f_moment, f_dist, l_dist, g_dist, d_na, k2, scratch)
            _record(yt, scratch, Z[N + j])
            for i in range(STATE_DIM):
                yt[i] = Y[j, i] + 0.5 * ds * k2[i]
            rod_rhs(yt, hist[N + M + j], c0, K_se_inv, K_bt_inv, v_star, u_star, rho_a, rho_j, f_sum,
                    f_moment, f_dist, l_dist, g_dist, d_na, k3, scratch)
            _record(yt, scratch, Z[N + M + j])
            for i in range(STATE_DIM):
                yt[i] = Y[j, i] + ds * k3[i]
            rod_rhs(yt, hist[N + 2 * M + j], c0, K_se_inv, K_bt_inv, v_star, u_star, rho_a, rho_j, f_sum,
                    f_moment, f_dist, l_dist, g_dist, d_na, k4, scratch)
            _record(yt, scratch, Z[N + 2 * M + j])
            for i in range(STATE_DIM):
                Y[j + 1, i] = Y[j, i] + ds / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        else:
            for i in range(STATE_DIM):
                Y[j + 1, i] = Y[j, i] + ds * k1[i]
        if _exceeds(Y[j + 1], bound):
            return j + 1
        _renormalize(Y[j + 1])
    rod_rhs(Y[M], hist[M], c0, K_se_inv, K_bt_inv, v_star, u_star, rho_a, rho_j, f_sum,
            f_moment, f_dist, l_dist, g_dist, d_na, k1, S[M])
    _record(Y[M], S[M], Z[M])
    return -1
