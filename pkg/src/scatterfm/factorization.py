"""Inverse engine: sharp-operator construction and Picard-series sampling.

From a (modified) far-field matrix F the Hermitian positive semidefinite
sharp operator

    F_sharp = |Re(e^{-it} F)| + |Im F|,    Re A = (A + A*)/2, Im A = (A - A*)/(2i)

is built by spectral calculus; the rotation phase t is zero for the
obstacle variants and comes from the contrast phase selection in the
medium variants. A sampling point z is classified through the truncated
Picard series over the eigensystem (lambda_n, psi_n) of F_sharp,

    W(z) = 1 / sum_{lambda_n > tau} |<phi_z, psi_n>_w|^2 / lambda_n,

with phi_z(x_hat) = e^{-ik z . x_hat}, the weighted inner product
<a, b>_w = sum_j w_j a_j conj(b_j) (w_j = 2 pi / N), and the relative
spectral cutoff tau = eps_rel * lambda_1. Large W flags z as inside the
reconstructed component; everything inside the a-priori domain B2 (plus a
one-cell guard band) is masked and carries no value.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from ._threads import run_chunked

DEFAULT_EPS_REL = 1e-8
PSD_TOL = 1e-10
EXCLUSION_DISTANCE = 0.25
THRESHOLD_GRID = np.arange(1, 10) / 10.0


class DegenerateSpectrumError(RuntimeError):
    """Sharp operator has no positive eigenvalue to expand against."""


class NoInteriorPointsError(ValueError):
    """Sampling grid misses the target component entirely."""


@dataclass(frozen=True)
class SharpOperator:
    """|Re(e^{-it}F)| + |Im F| with its complete eigensystem.

    Eigenvalues are descending and clamped at zero; eigenvector columns are
    orthonormal in the weighted discrete inner product on the direction
    grid (so psi columns carry norm sqrt(N / 2 pi) entrywise).
    """

    provenance: tuple
    t: float
    k: float
    grid: object
    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def build_sharp(ffm, t=0.0):
    """Spectral-calculus construction of the sharp operator from F."""
    f = ffm.entries
    g = np.exp(-1j * t) * f
    re_t = 0.5 * (g + g.conj().T)
    im = (f - f.conj().T) / 2j
    sharp = linalg.abs_operator(re_t) + linalg.abs_operator(im)
    eig = linalg.hermitian_eig(sharp)
    vals = eig.eigenvalues
    if vals[0] > 0 and vals[-1] < -PSD_TOL * vals[0]:
        raise RuntimeError(
            f"sharp operator not PSD: min eigenvalue {vals[-1]:.3e} "
            f"vs max {vals[0]:.3e}")
    vals = np.maximum(vals, 0.0)
    # rescale eigenvectors to be orthonormal under <.,.>_w, w = 2 pi / N
    vecs = eig.eigenvectors / math.sqrt(ffm.grid.weight)
    return SharpOperator(provenance=ffm.provenance, t=float(t), k=ffm.k,
                         grid=ffm.grid, matrix=sharp, eigenvalues=vals,
                         eigenvectors=vecs)


def test_vector(sharp, z):
    """phi_z(x_hat_j) = e^{-i k z . x_hat_j} on the direction grid."""
    return np.exp(-1j * sharp.k * (sharp.grid.directions @ np.asarray(z, float)))


def _series(sharp, points, eps_rel):
    lam = sharp.eigenvalues
    if lam[0] <= 0.0:
        raise DegenerateSpectrumError("largest eigenvalue of F_sharp is <= 0")
    keep = lam > eps_rel * lam[0]
    lam = lam[keep]
    psi = sharp.eigenvectors[:, keep]
    pts = np.atleast_2d(np.asarray(points, float))
    phi = np.exp(-1j * sharp.k * pts @ sharp.grid.directions.T)
    coeff = sharp.grid.weight * (phi @ psi.conj())
    return (np.abs(coeff) ** 2 / lam[None, :]).sum(axis=1)


def picard_indicator(sharp, z, eps_rel=DEFAULT_EPS_REL):
    """Reciprocal Picard series at one sampling point (large = inside)."""
    return float(1.0 / _series(sharp, z, eps_rel)[0])


@dataclass(frozen=True)
class IndicatorGrid:
    """Sampling window with per-point indicator values and exclusion mask.

    values is (ny, nx) with NaN at masked points; mask is True where the
    point is excluded (inside the dilated a-priori domain B2).
    """

    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray
    mask: np.ndarray

    def points(self):
        gx, gy = np.meshgrid(self.xs, self.ys)
        return np.stack([gx.ravel(), gy.ravel()], axis=1)


def reconstruct(sharp, window, resolution, mask_curve=None,
                eps_rel=DEFAULT_EPS_REL):
    """Evaluate the Picard indicator over a rectangular sampling window.

    window = (x0, x1, y0, y1); resolution is the point count per axis. The
    mask excludes the closure of mask_curve (normally B2) dilated by one
    grid cell.
    """
    x0, x1, y0, y1 = (float(v) for v in window)
    res = int(resolution)
    if res < 2 or x1 <= x0 or y1 <= y0:
        raise ValueError("window must be nonempty with resolution >= 2")
    xs = np.linspace(x0, x1, res)
    ys = np.linspace(y0, y1, res)
    cell = max((x1 - x0) / (res - 1), (y1 - y0) / (res - 1))
    gx, gy = np.meshgrid(xs, ys)
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    if mask_curve is not None:
        mask = mask_curve.signed_distance(pts) <= cell
    else:
        mask = np.zeros(len(pts), dtype=bool)
    values = np.full(len(pts), np.nan)
    free = np.nonzero(~mask)[0]
    if len(free):
        blocks = [free[lo:lo + 512] for lo in range(0, len(free), 512)]
        results = run_chunked(lambda b: 1.0 / _series(sharp, pts[b], eps_rel),
                              blocks)
        for block, vals in zip(blocks, results):
            values[block] = vals
    return IndicatorGrid(xs=xs, ys=ys, values=values.reshape(res, res),
                         mask=mask.reshape(res, res))


@dataclass(frozen=True)
class ReconstructionMetrics:
    contrast: float
    jaccard: float
    best_threshold: float


def threshold_and_score(grid, truth_curve):
    """Contrast ratio and best-threshold Jaccard against the true component.

    contrast = median W over grid points inside the truth, divided by the
    median W over unmasked points at distance >= 0.25 outside it. Jaccard
    compares {W >= theta max W} with the truth over theta in {0.1..0.9}.
    """
    pts = grid.points()
    w = grid.values.ravel()
    valid = ~grid.mask.ravel()
    inside = np.zeros(len(pts), dtype=bool)
    inside[valid] = truth_curve.contains(pts[valid])
    if not np.any(inside):
        raise NoInteriorPointsError("sampling grid contains no points of the "
                                    "true component")
    sd = np.full(len(pts), np.inf)
    sd[valid] = truth_curve.signed_distance(pts[valid])
    outside = valid & (sd >= EXCLUSION_DISTANCE)
    contrast = float(np.median(w[inside]) / np.median(w[outside]))

    wmax = np.nanmax(w[valid])
    best_j, best_theta = 0.0, THRESHOLD_GRID[0]
    for theta in THRESHOLD_GRID:
        pred = valid & (w >= theta * wmax)
        union = (pred | inside).sum()
        inter = (pred & inside).sum()
        j = inter / union if union else 0.0
        if j > best_j:
            best_j, best_theta = float(j), float(theta)
    return ReconstructionMetrics(contrast=contrast, jaccard=best_j,
                                 best_threshold=best_theta)


# ---------------------------------------------------------------------------
# exports
# ---------------------------------------------------------------------------

def write_indicator_csv(grid, path):
    """CSV rows x,y,indicator,masked for every unmasked grid point."""
    pts = grid.points()
    w = grid.values.ravel()
    masked = grid.mask.ravel()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "indicator", "masked"])
        for (x, y), val, m in zip(pts, w, masked):
            if m:
                continue
            writer.writerow([f"{x:.12g}", f"{y:.12g}", f"{val:.17e}", 0])


def write_indicator_pgm(grid, path, maxval=65535):
    """P2 PGM with W scaled linearly over unmasked points; masked pixels 0."""
    vals = grid.values
    valid = ~grid.mask
    img = np.zeros(vals.shape, dtype=int)
    if np.any(valid):
        lo = np.nanmin(vals[valid])
        hi = np.nanmax(vals[valid])
        if hi > lo:
            img[valid] = np.rint((vals[valid] - lo) / (hi - lo) * maxval).astype(int)
        else:
            img[valid] = maxval
    # image rows top-down: last y row first
    rows = img[::-1]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"P2\n{vals.shape[1]} {vals.shape[0]}\n{maxval}\n")
        for row in rows:
            fh.write(" ".join(str(v) for v in row) + "\n")
