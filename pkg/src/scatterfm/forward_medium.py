"""Coupled volume-integral / boundary-integral solver for a penetrable
component next to a sound-soft obstacle.

The total field u = u_i + u_s solves Delta u + k^2 (1 + q) u = 0 outside
the obstacle with u = 0 on its boundary; q is supported on the penetrable
component and extended by zero. The scattered field is represented as

    u_s = k^2 Int Phi(., y) q(y) u(y) dy  +  (D - i eta S) phi on d(omega2),

so the unknowns are the total field on the volume grid cells inside the
support and the combined-layer density on the obstacle. Volume quadrature
is the punctured midpoint rule with an analytic logarithmic correction on
the singular cell and tensor-Gauss refinement on near-diagonal cells.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.special as sp

from . import linalg
from .forward_bie import (Kernel, _self_block, _cross_block,
                          incident_plane_wave, SolverError)
from .geometry import curve_sample

NEAR_CELL_RADIUS = 2.5   # in units of h: pairs refined with Gauss quadrature
GAUSS_ORDER = 6
COARSE_CONTRAST_JUMP = 0.2


@dataclass(frozen=True)
class VolumeGrid:
    """Uniform cell grid covering the support of q with a 2-cell margin.

    Cells cut by the support boundary carry their inside-area fraction as a
    quadrature weight; a pure characteristic (center-in/center-out) rule
    leaves an O(h) staircase error that fluctuates with grid alignment and
    spoils monotone convergence.
    """

    m: int
    h: float
    origin: np.ndarray       # lower-left corner of the box
    centers: np.ndarray      # (n_active, 2) centers of overlapping cells
    index: np.ndarray        # (n_active,) flat indices into the full m x m grid
    q: np.ndarray            # (n_active,) contrast values at the centers
    fractions: np.ndarray    # (n_active,) inside-area fraction of each cell

    @property
    def cell_weights(self):
        return self.h ** 2 * self.fractions


_SUBSAMPLE = 16


def _cell_fractions(support, centers, h):
    """Inside-area fraction per cell; boundary cells are subsampled."""
    sd = support.signed_distance(centers)
    frac = np.where(sd < 0.0, 1.0, 0.0)
    near = np.abs(sd) <= 0.75 * h  # cell half-diagonal is ~0.707 h
    if np.any(near):
        off = (np.arange(_SUBSAMPLE) + 0.5) / _SUBSAMPLE - 0.5
        ox, oy = np.meshgrid(off * h, off * h)
        offsets = np.stack([ox.ravel(), oy.ravel()], axis=1)
        for i in np.nonzero(near)[0]:
            sub = centers[i][None, :] + offsets
            frac[i] = support.contains(sub).mean()
    return frac


def build_volume_grid(contrast, m):
    """Area-fraction-weighted cell grid over the contrast support."""
    support = contrast.support
    x0, x1, y0, y1 = support.bounding_box()
    size = max(x1 - x0, y1 - y0)
    if m < 8:
        raise ValueError(f"volume grid needs m >= 8, got {m}")
    length = size * m / (m - 4.0)
    cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    origin = np.array([cx - length / 2.0, cy - length / 2.0])
    h = length / m
    ax = origin[0] + (np.arange(m) + 0.5) * h
    ay = origin[1] + (np.arange(m) + 0.5) * h
    gx, gy = np.meshgrid(ax, ay)
    centers = np.stack([gx.ravel(), gy.ravel()], axis=1)
    frac = _cell_fractions(support, centers, h)
    idx = np.nonzero(frac > 0.0)[0]
    q = contrast.form_value(centers[idx])
    grid = VolumeGrid(m=m, h=h, origin=origin, centers=centers[idx],
                      index=idx, q=q, fractions=frac[idx])
    _warn_if_coarse(grid)
    return grid


def _warn_if_coarse(grid):
    qa = np.abs(grid.q)
    scale = qa.max()
    if scale == 0.0:
        return
    cols = grid.index % grid.m
    rows = grid.index // grid.m
    lookup = {(r, c): i for i, (r, c) in enumerate(zip(rows, cols))}
    worst = 0.0
    for i, (r, c) in enumerate(zip(rows, cols)):
        for dr, dc in ((0, 1), (1, 0)):
            j = lookup.get((r + dr, c + dc))
            if j is not None:
                worst = max(worst, abs(qa[i] - qa[j]) / scale)
    if worst > COARSE_CONTRAST_JUMP:
        warnings.warn(f"volume grid too coarse: contrast varies by "
                      f"{worst:.0%} between adjacent cells", RuntimeWarning)


def _log_cell_integral(h):
    """Integral of ln|y| over the square cell [-h/2, h/2]^2 (closed form)."""
    return h * h * (np.log(h) - 0.5 * np.log(2.0) + np.pi / 4.0 - 1.5)


def _volume_matrix(kernel, grid):
    """V[i, j] = integral of Phi(x_i, y) over cell j, midpoint + corrections.

    Partial cells enter through their area fraction: the full-cell rule is
    scaled by fraction_j, treating the kernel as constant over the cell.
    """
    k = kernel.k
    h = grid.h
    pts = grid.centers
    d = pts[:, None, :] - pts[None, :, :]
    r = np.linalg.norm(d, axis=2)
    np.fill_diagonal(r, 1.0)
    v = kernel.fundamental(r) * h * h
    # self cell: small-argument expansion of Phi integrated analytically
    self_val = (0.25j - (np.euler_gamma + np.log(k / 2.0)) / (2.0 * np.pi)) * h * h \
        - _log_cell_integral(h) / (2.0 * np.pi)
    np.fill_diagonal(v, self_val)
    # near cells: tensor Gauss quadrature removes the midpoint-rule error
    np.fill_diagonal(r, np.inf)
    near_i, near_j = np.nonzero(r < NEAR_CELL_RADIUS * h)
    if len(near_i):
        gx, gw = np.polynomial.legendre.leggauss(GAUSS_ORDER)
        gx = gx * (h / 2.0)
        gw = gw * (h / 2.0)
        ox, oy = np.meshgrid(gx, gx)
        offsets = np.stack([ox.ravel(), oy.ravel()], axis=1)
        wts = np.outer(gw, gw).ravel()
        ysub = pts[near_j][:, None, :] + offsets[None, :, :]
        rs = np.linalg.norm(pts[near_i][:, None, :] - ysub, axis=2)
        v[near_i, near_j] = kernel.fundamental(rs) @ wts
    return v * grid.fractions[None, :]


def _volume_eval(kernel, grid, targets):
    """Volume-potential kernel from active cells to far-away target points."""
    d = np.asarray(targets, float)[:, None, :] - grid.centers[None, :, :]
    r = np.linalg.norm(d, axis=2)
    return kernel.fundamental(r) * grid.cell_weights[None, :]


@dataclass
class MediumSolution:
    """Total field on the volume grid plus obstacle density, per direction."""

    k: float
    eta: float
    grid: VolumeGrid
    obstacle_nodes: object          # BoundaryNodes or None
    field: np.ndarray               # (n_active, n_rhs) total field u
    density: np.ndarray             # (2n, n_rhs) or (0, n_rhs)
    directions: np.ndarray

    def far_field(self, directions):
        """Radiation integrals of the volume and layer parts; see forward_bie
        for the shared normalization."""
        xh = np.asarray(directions, float)
        phase_v = np.exp(-1j * self.k * xh @ self.grid.centers.T)
        weights = self.grid.cell_weights * self.grid.q
        out = self.k ** 2 * (phase_v * weights[None, :]) @ self.field
        if self.obstacle_nodes is not None:
            nd = self.obstacle_nodes
            n = len(nd.s) // 2
            phase_b = np.exp(-1j * self.k * xh @ nd.points.T)
            xnu = xh @ nd.normals.T
            ker = (-1j * self.k * xnu - 1j * self.eta) * phase_b
            out += (ker * ((np.pi / n) * nd.speed)[None, :]) @ self.density
        return out

    def scattered_field(self, points):
        pts = np.atleast_2d(np.asarray(points, float))
        kernel = Kernel(self.k)
        vol = _volume_eval(kernel, self.grid, pts)
        out = self.k ** 2 * (vol * self.grid.q[None, :]) @ self.field
        if self.obstacle_nodes is not None:
            nd = self.obstacle_nodes
            n = len(nd.s) // 2
            d = pts[:, None, :] - nd.points[None, :, :]
            r = np.linalg.norm(d, axis=2)
            dl = -kernel.grad_factor(r) * np.einsum("ijl,jl->ij", d, nd.normals)
            ker = dl - 1j * self.eta * kernel.fundamental(r)
            out += (ker * ((np.pi / n) * nd.speed)[None, :]) @ self.density
        return out


def solve_medium_obstacle(contrast, omega2, k, directions, m=64, n=64):
    """Solve the penetrable-component + sound-soft-obstacle problem.

    contrast may be None for the zero-contrast reduction (pure obstacle
    scattering); omega2 may be None to solve the medium alone.
    """
    k = float(k)
    kernel = Kernel(k)
    eta = k
    directions = np.atleast_2d(np.asarray(directions, float))
    if contrast is not None:
        grid = build_volume_grid(contrast, m)
    else:
        grid = VolumeGrid(m=0, h=1.0, origin=np.zeros(2),
                          centers=np.zeros((0, 2)), index=np.zeros(0, int),
                          q=np.zeros(0, complex), fractions=np.zeros(0))
    na = len(grid.centers)

    bnodes = curve_sample(omega2, n) if omega2 is not None else None
    nb = len(bnodes.s) if bnodes is not None else 0
    size = na + nb
    if size == 0:
        raise ValueError("nothing to solve: no contrast and no obstacle")

    a = np.zeros((size, size), dtype=complex)
    rhs = np.zeros((size, directions.shape[0]), dtype=complex)
    if na:
        v = _volume_matrix(kernel, grid)
        a[:na, :na] = np.eye(na) - k ** 2 * v * grid.q[None, :]
        rhs[:na] = incident_plane_wave(grid.centers, directions, k)
    if nb:
        nhalf = n
        # combined Dirichlet trace on the obstacle: I/2 + K - i eta S
        a[na:, na:] = 0.5 * np.eye(nb) \
            + _self_block("K", bnodes, kernel) \
            - 1j * eta * _self_block("S", bnodes, kernel)
        rhs[na:] = -incident_plane_wave(bnodes.points, directions, k)
        if na:
            # layer potential at the cell centers (smooth: domains disjoint)
            d = grid.centers[:, None, :] - bnodes.points[None, :, :]
            r = np.linalg.norm(d, axis=2)
            dl = -kernel.grad_factor(r) * np.einsum("ijl,jl->ij", d, bnodes.normals)
            ker = (dl - 1j * eta * kernel.fundamental(r)) \
                * ((np.pi / nhalf) * bnodes.speed)[None, :]
            a[:na, na:] = -ker
            # volume potential on the obstacle nodes
            vb = _volume_eval(kernel, grid, bnodes.points)
            a[na:, :na] = k ** 2 * vb * grid.q[None, :]

    try:
        unknowns = linalg.solve_linear(a, rhs)
    except linalg.SingularMatrixError as exc:
        raise SolverError(f"coupled medium system singular: {exc}") from exc
    return MediumSolution(k=k, eta=eta, grid=grid, obstacle_nodes=bnodes,
                          field=unknowns[:na], density=unknowns[na:],
                          directions=directions)


def pde_residual(solution, points, h=1e-3):
    """Five-point finite-difference check of (Delta + k^2) u_s = 0 at
    exterior points, relative to k^2 max |u_s| there."""
    pts = np.atleast_2d(np.asarray(points, float))
    k = solution.k
    stencil = np.concatenate([pts,
                              pts + [h, 0], pts - [h, 0],
                              pts + [0, h], pts - [0, h]])
    vals = solution.scattered_field(stencil)
    npts = len(pts)
    u0, ue, uw, un, uso = (vals[i * npts:(i + 1) * npts] for i in range(5))
    lap = (ue + uw + un + uso - 4.0 * u0) / h ** 2
    res = lap + k ** 2 * u0
    return float(np.abs(res).max() / (k ** 2 * np.abs(u0).max()))
