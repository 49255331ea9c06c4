"""Compiled inner loops for transfer-matrix products.

Everything here operates on plain float arrays so numba can compile it.
The public wrappers in :mod:`qpcocycle.cocycle` own validation.
"""

import math

import numpy as np
from numba import njit, prange

TWO_PI = 2.0 * math.pi
# rescale the running product once an entry grows past 2**512
RESCALE_THRESHOLD = 2.0**512


@njit(cache=True, inline="always")
def potential_at(cos_c, sin_c, x):
    s = cos_c[0]
    for k in range(1, cos_c.shape[0]):
        s += cos_c[k] * math.cos(TWO_PI * k * x)
    for k in range(sin_c.shape[0]):
        s += sin_c[k] * math.sin(TWO_PI * (k + 1) * x)
    return s


@njit(cache=True, inline="always")
def norm2x2(a, b, c, d):
    # largest singular value, stable form of sqrt((f + sqrt(f^2 - 4 det^2)) / 2)
    return 0.5 * (math.hypot(a + d, b - c) + math.hypot(a - d, b + c))


@njit(cache=True)
def advance(cos_c, sin_c, omega, energy, nsteps, state):
    """Multiply ``nsteps`` further one-step matrices into ``state`` in place.

    ``state`` = [a, b, c, d, log_acc, phase, comp]; ``phase`` is the last
    circle point used, ``comp`` the Kahan compensation of the phase sum.
    """
    a, b, c, d = state[0], state[1], state[2], state[3]
    acc = state[4]
    phase = state[5]
    comp = state[6]
    for _ in range(nsteps):
        y = omega - comp
        t = phase + y
        comp = (t - phase) - y
        phase = t
        if phase >= 1.0:
            phase -= 1.0
        elif phase < 0.0:
            phase += 1.0
        w = potential_at(cos_c, sin_c, phase) - energy
        na = w * a - c
        nb = w * b - d
        c = a
        d = b
        a = na
        b = nb
        if abs(a) > RESCALE_THRESHOLD or abs(b) > RESCALE_THRESHOLD:
            s = norm2x2(a, b, c, d)
            a /= s
            b /= s
            c /= s
            d /= s
            acc += math.log(s)
    state[0], state[1], state[2], state[3] = a, b, c, d
    state[4] = acc
    state[5] = phase
    state[6] = comp


@njit(cache=True)
def fresh_state(x):
    st = np.empty(7)
    st[0] = 1.0
    st[1] = 0.0
    st[2] = 0.0
    st[3] = 1.0
    st[4] = 0.0
    st[5] = x
    st[6] = 0.0
    return st


@njit(cache=True, parallel=True)
def orbit_log_norms(cos_c, sin_c, xs, omega, energies, checkpoints):
    """log||M_N(E, x, omega)|| for every energy, start point and checkpoint N.

    ``checkpoints`` must be strictly increasing positive integers; all of
    them are reached in a single pass per (E, x) pair.
    """
    ne = energies.shape[0]
    nx = xs.shape[0]
    nc = checkpoints.shape[0]
    out = np.empty((ne, nx, nc))
    for flat in prange(ne * nx):
        ie = flat // nx
        ix = flat % nx
        st = fresh_state(xs[ix])
        done = 0
        for ic in range(nc):
            advance(cos_c, sin_c, omega, energies[ie], checkpoints[ic] - done, st)
            done = checkpoints[ic]
            out[ie, ix, ic] = st[4] + math.log(norm2x2(st[0], st[1], st[2], st[3]))
    return out


@njit(cache=True, parallel=True)
def periodic_traces(cos_c, sin_c, xs, omega, energies, q):
    """tr M_q(E, x) for a grid of energies and start points (no rescaling).

    Callers keep q small enough that entries stay finite.
    """
    ne = energies.shape[0]
    nx = xs.shape[0]
    out = np.empty((ne, nx))
    for flat in prange(ne * nx):
        ie = flat // nx
        ix = flat % nx
        a, b, c, d = 1.0, 0.0, 0.0, 1.0
        for j in range(1, q + 1):
            x = xs[ix] + j * omega
            x -= math.floor(x)
            w = potential_at(cos_c, sin_c, x) - energies[ie]
            na = w * a - c
            nb = w * b - d
            c = a
            d = b
            a = na
            b = nb
        out[ie, ix] = a + d
    return out
