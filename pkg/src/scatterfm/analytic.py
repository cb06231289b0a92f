"""Separation-of-variables solutions for circular scatterers.

These closed-form far fields are the validation oracles for the boundary-
and volume-integral solvers, and the backing of the `oracle` CLI command.
Modal coefficients c_m are the classical ratios for a disc of radius a
centered at the origin; translation enters through the plane-wave phase
identity, so discs anywhere in the plane are covered.

Far fields follow the package normalization (radiation integral without
prefactor), under which the disc far field reads
    u_inf(x_hat, theta) = -4i sum_m c_m e^{i m (phi_x - phi_theta)}.
"""

import numpy as np
import scipy.special as sp

DISC_CONDITIONS = ("dirichlet", "neumann", "impedance", "transmission")


def mode_cutoff(ka):
    """Series length after which disc modal coefficients are negligible."""
    return int(np.ceil(abs(ka) + 4.0 * abs(ka) ** (1.0 / 3.0) + 12))


def disc_coefficients(condition, radius, k, mmax=None, lambda0=1.0, q0=None):
    """Modal far-field coefficients c_m, m = 0..mmax, for a disc of radius a.

    dirichlet:    c_m = -J_m(ka) / H_m(ka)
    neumann:      c_m = -J_m'(ka) / H_m'(ka)
    impedance:    c_m = -(k J_m'(ka) + i l0 J_m(ka)) / (k H_m'(ka) + i l0 H_m(ka))
    transmission: interior wavenumber k1 = k sqrt(1 + q0), continuity of the
                  total field and its normal derivative across r = a.
    """
    if condition not in DISC_CONDITIONS:
        raise ValueError(f"unknown disc condition {condition!r}")
    a = float(radius)
    ka = k * a
    if mmax is None:
        mmax = mode_cutoff(ka)
    m = np.arange(mmax + 1)
    j, jp = sp.jv(m, ka), sp.jvp(m, ka)
    h, hp = sp.hankel1(m, ka), sp.h1vp(m, ka)
    if condition == "dirichlet":
        return -j / h
    if condition == "neumann":
        return -jp / hp
    if condition == "impedance":
        return -(k * jp + 1j * lambda0 * j) / (k * hp + 1j * lambda0 * h)
    if q0 is None:
        raise ValueError("transmission condition requires q0")
    k1 = k * np.sqrt(1.0 + complex(q0))
    j1, j1p = sp.jv(m, k1 * a), sp.jvp(m, k1 * a)
    num = k1 * j1p * j - k * jp * j1
    den = k1 * j1p * h - k * hp * j1
    return -num / den


def disc_far_field(condition, radius, k, center, obs_angles, inc_angles,
                   lambda0=1.0, q0=None, mmax=None):
    """Far-field matrix u_inf(x_hat_i, theta_j) of a disc at `center`.

    obs_angles and inc_angles are angles on the unit circle; the result has
    shape (len(obs_angles), len(inc_angles)).
    """
    cm = disc_coefficients(condition, radius, k, mmax=mmax,
                           lambda0=lambda0, q0=q0)
    phi_x = np.asarray(obs_angles, float)[:, None]
    phi_t = np.asarray(inc_angles, float)[None, :]
    acc = np.full((phi_x.shape[0], phi_t.shape[1]), cm[0], dtype=complex)
    for m in range(1, len(cm)):
        acc += cm[m] * 2.0 * np.cos(m * (phi_x - phi_t))
    out = -4j * acc
    d = np.asarray(center, float)
    if np.any(d != 0.0):
        xh = np.stack([np.cos(phi_x[:, 0]), np.sin(phi_x[:, 0])], axis=1)
        th = np.stack([np.cos(phi_t[0, :]), np.sin(phi_t[0, :])], axis=1)
        out = out * np.exp(1j * k * (th @ d)[None, :] - 1j * k * (xh @ d)[:, None])
    return out
