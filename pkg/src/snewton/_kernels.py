"""Compiled inner loops shared by the Poisson solver and the time stepper.

Everything here works on raw arrays in code units (G = hbar = 1). The public
wrappers in :mod:`snewton.poisson` and :mod:`snewton.evolve` do validation.
"""

import math

import numba as nb
import numpy as np

# 6th-order central second-difference weights for offsets 1, 2, 3.
# The centre weight (-49/18) is implied: sum_k c_k (u[j+k] + u[j-k] - 2 u[j]).
D2_C1 = 3.0 / 2.0
D2_C2 = -3.0 / 20.0
D2_C3 = 1.0 / 90.0


@nb.njit(cache=True)
def second_derivative_into(u, dr, out):
    """Odd ghost extension at the origin, even ghost extension at r = R.

    Written in difference form so that the O(1/dr^2) cancellation happens on
    small numbers; this keeps round-off below the 6th-order truncation error
    down to dr ~ 1/128.
    """
    n = u.shape[0]
    inv = 1.0 / (dr * dr)
    last = n - 1
    for j in range(n):
        uj = u[j]
        acc = 0.0 * uj
        for k in range(1, 4):
            if k == 1:
                c = D2_C1
            elif k == 2:
                c = D2_C2
            else:
                c = D2_C3
            jm = j - k
            jp = j + k
            if jm >= 0:
                a = u[jm]
            else:
                a = -u[-jm]
            if jp <= last:
                b = u[jp]
            else:
                b = u[2 * last - jp]
            acc += c * ((a - uj) + (b - uj))
        out[j] = acc * inv


@nb.njit(cache=True)
def cumulative_into(f, h, out, start_parity=0, end_parity=0):
    """F_j = integral of f from sample 0 to sample j.

    Even nodes: composite Simpson panels. Odd nodes: the preceding even node
    plus a single-interval rule from the cubic through four neighbouring
    samples. At an end the missing neighbour is either supplied by symmetry
    (parity +1 even, -1 odd about that end sample) or, for parity 0, the
    cubic is taken one-sided. All variants are exact on cubics.
    """
    n = f.shape[0]
    out[0] = 0.0
    for j in range(2, n, 2):
        out[j] = out[j - 2] + h / 3.0 * (f[j - 2] + 4.0 * f[j - 1] + f[j])
    for j in range(1, n, 2):
        i = j - 1
        if i == 0:
            if start_parity == 0:
                w = 9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]
            else:
                w = -start_parity * f[1] + 13.0 * f[0] + 13.0 * f[1] - f[2]
        elif i + 2 <= n - 1:
            w = -f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2]
        elif end_parity == 0:
            w = f[i - 2] - 5.0 * f[i - 1] + 19.0 * f[i] + 9.0 * f[i + 1]
        else:
            w = -f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - end_parity * f[i]
        out[j] = out[i] + h / 24.0 * w


@nb.njit(cache=True)
def potential_into(u, r, dr, mass, phi, dens, inner, outer_rev, scratch):
    """Gravitational potential of the density |u|^2 / (4 pi r^2) sourced by mass.

    |u|^2 is even and |u|^2 / r odd about r = 0, which fixes the end rules
    at the origin; this keeps Phi_1 >= Phi_0 for any nonnegative density.
    """
    n = u.shape[0]
    for j in range(n):
        dens[j] = u[j].real * u[j].real + u[j].imag * u[j].imag
    cumulative_into(dens, dr, inner, 1, 0)
    scratch[n - 1] = 0.0
    for j in range(1, n):
        scratch[n - 1 - j] = dens[j] / r[j]
    cumulative_into(scratch, dr, outer_rev, 0, -1)
    pref = 4.0 * math.pi * mass
    phi[0] = -pref * outer_rev[n - 1]
    for j in range(1, n):
        phi[j] = -pref * (inner[j] / r[j] + outer_rev[n - 1 - j])


@nb.njit(cache=True)
def rhs_into(u, r, dr, mass, absorber, gravity, out, phi, lap, dens, inner, outer_rev, scratch):
    if gravity:
        potential_into(u, r, dr, mass, phi, dens, inner, outer_rev, scratch)
    else:
        for j in range(u.shape[0]):
            phi[j] = 0.0
    second_derivative_into(u, dr, lap)
    kin = 0.5 / mass
    for j in range(u.shape[0]):
        out[j] = 1j * kin * lap[j] - 1j * mass * (phi[j] + 1j * absorber[j]) * u[j]
    out[0] = 0.0


@nb.njit(cache=True)
def rk4_steps(u, r, dr, mass, absorber, gravity, dt, nsteps):
    """Advance u in place by nsteps classical RK4 steps.

    The final update uses compensated summation. Returns the number of steps
    completed; a step producing a non-finite sample stops early.
    """
    n = u.shape[0]
    k1 = np.empty(n, np.complex128)
    k2 = np.empty(n, np.complex128)
    k3 = np.empty(n, np.complex128)
    k4 = np.empty(n, np.complex128)
    y = np.empty(n, np.complex128)
    comp = np.zeros(n, np.complex128)
    lap = np.empty(n, np.complex128)
    phi = np.empty(n)
    dens = np.empty(n)
    inner = np.empty(n)
    outer_rev = np.empty(n)
    scratch = np.empty(n)
    for s in range(nsteps):
        rhs_into(u, r, dr, mass, absorber, gravity, k1, phi, lap, dens, inner, outer_rev, scratch)
        for j in range(n):
            y[j] = u[j] + 0.5 * dt * k1[j]
        y[0] = 0.0
        rhs_into(y, r, dr, mass, absorber, gravity, k2, phi, lap, dens, inner, outer_rev, scratch)
        for j in range(n):
            y[j] = u[j] + 0.5 * dt * k2[j]
        y[0] = 0.0
        rhs_into(y, r, dr, mass, absorber, gravity, k3, phi, lap, dens, inner, outer_rev, scratch)
        for j in range(n):
            y[j] = u[j] + dt * k3[j]
        y[0] = 0.0
        rhs_into(y, r, dr, mass, absorber, gravity, k4, phi, lap, dens, inner, outer_rev, scratch)
        finite = True
        for j in range(n):
            inc = dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) - comp[j]
            new = u[j] + inc
            comp[j] = (new - u[j]) - inc
            u[j] = new
            if not (math.isfinite(new.real) and math.isfinite(new.imag)):
                finite = False
        u[0] = 0.0
        if not finite:
            return s + 1
    return nsteps
