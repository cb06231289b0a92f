"""Nystroem boundary-integral solver for exterior 2D Helmholtz problems.

Operators S, K, K', N are discretized on 2n-point periodic grids per curve
with Kress' logarithmic quadrature on same-curve blocks and plain
trapezoidal quadrature on (smooth) cross-curve blocks. The hypersingular
operator N is assembled in regularized form: tangential differentiation
composed around the single layer, plus a wavenumber-weighted single layer
with normal-product kernel.

Scattered fields are represented with combined layers so the solves stay
uniquely solvable at every wavenumber:
    Dirichlet curves:           u = (D - i eta S) phi,   eta = k
    Neumann/impedance curves:   u = (S + i eta D) phi
The exterior trace/derivative jump relations then give one block equation
per curve; all incident directions share a single LU factorization.

All far fields use the fixed 2D normalization
    u_s(x) = gamma2(k) * (e^{ikr} / sqrt(r)) * u_inf(x_hat) + O(r^{-3/2}),
    gamma2(k) = e^{i pi/4} / sqrt(8 pi k),
so u_inf is the plain radiation integral of the representation. In this
convention Im F of a far-field operator is positive semidefinite for
non-absorbing boundary conditions and strictly positive definite for the
absorbing impedance condition; every far-field producer in the package
shares it, which is what makes operator sums meaningful.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.special as sp

from . import linalg
from .geometry import curve_sample

IMAG_WAVENUMBER = "i"
OPERATOR_KINDS = ("S", "K", "Kp", "N")
BC_RESIDUAL_TOL = 1e-6


class AssemblyError(ValueError):
    """Curve set not admissible for assembly (e.g. intersecting curves)."""


class SolverError(RuntimeError):
    """Block system singular or solution fails its residual check."""


def gamma2(k):
    """2D far-field normalization constant e^{i pi/4} / sqrt(8 pi k)."""
    return np.exp(1j * np.pi / 4) / math.sqrt(8.0 * np.pi * k)


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

class Kernel:
    """Fundamental solution at wavenumber k > 0 or at the marker 'i'.

    For k > 0:  Phi(x, y) = (i/4) H0^(1)(k r)
    For 'i':    Phi(x, y) = (1/2 pi) K0(r)   (exponentially decaying)
    grad_factor g(r) is defined by grad_x Phi = g(r) (x - y).
    """

    def __init__(self, wavenumber):
        if wavenumber == IMAG_WAVENUMBER:
            self.k = None
        else:
            k = float(wavenumber)
            if k <= 0:
                raise ValueError(f"wavenumber must be positive or 'i', got {wavenumber}")
            self.k = k
        self.wavenumber = wavenumber

    @property
    def is_imaginary(self):
        return self.k is None

    def fundamental(self, r):
        if self.is_imaginary:
            return sp.k0(r) / (2.0 * np.pi)
        return 0.25j * sp.hankel1(0, self.k * r)

    def grad_factor(self, r):
        if self.is_imaginary:
            return -sp.k1(r) / (2.0 * np.pi * r)
        return -0.25j * self.k * sp.hankel1(1, self.k * r) / r

    def grad_factor_prime(self, r):
        if self.is_imaginary:
            k1p = -(sp.k0(r) + sp.k1(r) / r)
            return -(k1p * r - sp.k1(r)) / (2.0 * np.pi * r * r)
        z = self.k * r
        h1p = sp.hankel1(0, z) - sp.hankel1(1, z) / z
        return -0.25j * self.k * (self.k * h1p * r - sp.hankel1(1, z)) / (r * r)

    def ksq(self):
        """k^2 with the continuation value -1 at the marker 'i'."""
        return -1.0 if self.is_imaginary else self.k ** 2


def kress_log_weights(n):
    """Quadrature matrix R for the 2 pi-periodic log kernel.

    R[i, j] approximates integration of f(tau) ln(4 sin^2((t_i - tau)/2))
    over [0, 2 pi) from nodal values f(t_j) on the 2n-point grid, exactly
    for trigonometric polynomials of degree < n.
    """
    j = np.arange(2 * n)
    diff = np.pi * j / n  # t_0 - t_j up to sign; R depends on |i-j| only
    m = np.arange(1, n)
    row = -(2.0 * np.pi / n) * (np.cos(np.outer(diff, m)) / m).sum(axis=1) \
        - (np.pi / n ** 2) * np.cos(n * diff)
    idx = np.abs(np.subtract.outer(j, j))
    return row[idx]


def fourier_diff_matrix(m):
    """Spectral differentiation matrix on m equispaced periodic nodes (m even)."""
    j = np.arange(m)
    diff = np.subtract.outer(j, j)
    with np.errstate(divide="ignore", invalid="ignore"):
        d = 0.5 * (-1.0) ** diff / np.tan(np.pi * diff / m)
    np.fill_diagonal(d, 0.0)
    return d


@dataclass(frozen=True)
class BoundaryOperatorMatrix:
    """Discrete boundary operator with quadrature weights folded in.

    The matrix maps nodal density values to nodal operator values. weights
    holds the arc-length trapezoidal weights (pi/n) |x'(t_j)|; the weighted
    similarity W^(1/2) A W^(-1/2) is the symmetric normal form used by the
    sign/coercivity checks.
    """

    kind: str
    wavenumber: object
    curves: tuple
    n: int
    matrix: np.ndarray
    weights: np.ndarray

    def weighted_symmetric(self):
        w = np.sqrt(self.weights)
        return self.matrix * (w[:, None] / w[None, :])


def _pairwise_disjoint(curves):
    for i, a in enumerate(curves):
        for b in curves[i + 1:]:
            pa, pb = a.polygon(512), b.polygon(512)
            if np.any(b.contains(pa)) or np.any(a.contains(pb)):
                return False
            lo = 0
            dmin = np.inf
            while lo < len(pa):
                block = pa[lo:lo + 128]
                d = np.linalg.norm(block[:, None, :] - pb[None, :, :], axis=2)
                dmin = min(dmin, d.min())
                lo += 128
            if dmin <= 0.0:
                return False
    return True


# -- same-curve blocks -------------------------------------------------------

def _geometry_arrays(nodes):
    pts = nodes.points
    d = pts[:, None, :] - pts[None, :, :]
    r = np.linalg.norm(d, axis=2)
    np.fill_diagonal(r, 1.0)  # placeholder, diagonals are set analytically
    tdiff = nodes.s[:, None] - nodes.s[None, :]
    log4sin = np.log(4.0 * np.sin(tdiff / 2.0) ** 2 + np.eye(len(pts)))
    return d, r, log4sin


def _single_layer_self(nodes, kernel, nu_product=False):
    n = len(nodes.s) // 2
    sp_j = nodes.speed
    d, r, log4sin = _geometry_arrays(nodes)
    factor = np.ones_like(r)
    if nu_product:
        factor = nodes.normals @ nodes.normals.T
    if kernel.is_imaginary:
        m1 = -(1.0 / (4.0 * np.pi)) * sp.i0(r) * factor * sp_j[None, :]
        full = (sp.k0(r) / (2.0 * np.pi)) * factor * sp_j[None, :]
        diag = (-np.euler_gamma / (2.0 * np.pi)
                - np.log(nodes.speed / 2.0) / (2.0 * np.pi)) * nodes.speed
    else:
        k = kernel.k
        m1 = -(1.0 / (4.0 * np.pi)) * sp.j0(k * r) * factor * sp_j[None, :]
        full = 0.25j * sp.hankel1(0, k * r) * factor * sp_j[None, :]
        diag = (0.25j - np.euler_gamma / (2.0 * np.pi)
                - np.log(k * nodes.speed / 2.0) / (2.0 * np.pi)) * nodes.speed
    # r carries a placeholder 1.0 on the diagonal; the true limits are
    # J_0(0) = I_0(0) = 1 (and nu.nu = 1), so reset m1 there explicitly
    np.fill_diagonal(m1, -(1.0 / (4.0 * np.pi)) * nodes.speed)
    m2 = full - m1 * log4sin
    np.fill_diagonal(m2, diag)
    return kress_log_weights(n) * m1 + (np.pi / n) * m2


def _double_layer_self(nodes, kernel, adjoint=False):
    """K (adjoint=False) or K' (adjoint=True) on one curve."""
    n = len(nodes.s) // 2
    d, r, log4sin = _geometry_arrays(nodes)
    if adjoint:
        dot = np.einsum("ijl,il->ij", d, nodes.normals)
    else:
        dot = np.einsum("ijl,jl->ij", d, nodes.normals)
    sign = 1.0 if adjoint else -1.0
    full = sign * kernel.grad_factor(r) * dot * nodes.speed[None, :]
    # log-carrying part of the kernel: K1(z) = 1/z + ln(z/2) I1(z) + ...,
    # H1(z) = J1(z) + i(2/pi)(ln(z/2) J1(z) - 2/(pi z) + ...)
    if kernel.is_imaginary:
        m1 = -sign * sp.i1(r) / (4.0 * np.pi * r) * dot * nodes.speed[None, :]
    else:
        k = kernel.k
        m1 = sign * k * sp.j1(k * r) / (4.0 * np.pi * r) * dot * nodes.speed[None, :]
    np.fill_diagonal(m1, 0.0)
    m2 = full - m1 * log4sin
    cross = nodes.d1[:, 0] * nodes.d2[:, 1] - nodes.d1[:, 1] * nodes.d2[:, 0]
    np.fill_diagonal(m2, -cross / (4.0 * np.pi * nodes.speed ** 2))
    return kress_log_weights(n) * m1 + (np.pi / n) * m2


def _hypersingular_self(nodes, kernel):
    """Maue form: N = D_s S D_s + k^2 S_nu.nu with D_s the arc-length derivative."""
    s_mat = _single_layer_self(nodes, kernel)
    s_nu = _single_layer_self(nodes, kernel, nu_product=True)
    ds = fourier_diff_matrix(len(nodes.s)) / nodes.speed[:, None]
    return ds @ s_mat @ ds + kernel.ksq() * s_nu


# -- cross-curve blocks (kernels are smooth) ---------------------------------

def _cross_block(kind, target, source, kernel):
    n = len(source.s) // 2
    d = target.points[:, None, :] - source.points[None, :, :]
    r = np.linalg.norm(d, axis=2)
    w = (np.pi / n) * source.speed[None, :]
    if kind == "S":
        return kernel.fundamental(r) * w
    g = kernel.grad_factor(r)
    if kind == "K":
        dot_y = np.einsum("ijl,jl->ij", d, source.normals)
        return -g * dot_y * w
    if kind == "Kp":
        dot_x = np.einsum("ijl,il->ij", d, target.normals)
        return g * dot_x * w
    # hypersingular
    dot_x = np.einsum("ijl,il->ij", d, target.normals)
    dot_y = np.einsum("ijl,jl->ij", d, source.normals)
    nu_dot = target.normals @ source.normals.T
    gp = kernel.grad_factor_prime(r)
    return (-gp / r * dot_x * dot_y - g * nu_dot) * w


def _self_block(kind, nodes, kernel):
    if kind == "S":
        return _single_layer_self(nodes, kernel)
    if kind == "K":
        return _double_layer_self(nodes, kernel, adjoint=False)
    if kind == "Kp":
        return _double_layer_self(nodes, kernel, adjoint=True)
    return _hypersingular_self(nodes, kernel)


def assemble_boundary_operator(kind, curves, wavenumber, n):
    """Assemble one of S, K, K', N on a list of pairwise disjoint curves."""
    if kind not in OPERATOR_KINDS:
        raise ValueError(f"unknown operator kind {kind!r}")
    if n < 16 or n % 2:
        raise ValueError(f"n must be even and >= 16, got {n}")
    curves = tuple(curves)
    if not _pairwise_disjoint(curves):
        raise AssemblyError("curves must be pairwise disjoint")
    kernel = Kernel(wavenumber)
    nodes = [curve_sample(c, n) for c in curves]
    size = 2 * n * len(curves)
    mat = np.empty((size, size), dtype=complex)
    for i, tgt in enumerate(nodes):
        for j, src in enumerate(nodes):
            block = _self_block(kind, tgt, kernel) if i == j \
                else _cross_block(kind, tgt, src, kernel)
            mat[2 * n * i:2 * n * (i + 1), 2 * n * j:2 * n * (j + 1)] = block
    weights = np.concatenate([(np.pi / n) * nd.speed for nd in nodes])
    return BoundaryOperatorMatrix(kind=kind, wavenumber=wavenumber,
                                  curves=curves, n=n, matrix=mat,
                                  weights=weights)


# ---------------------------------------------------------------------------
# exterior solver
# ---------------------------------------------------------------------------

BOUNDARY_CONDITIONS = ("dirichlet", "neumann", "impedance")


@dataclass(frozen=True)
class BoundarySpec:
    """One closed scatterer curve with its boundary condition."""

    curve: object
    condition: str
    lambda0: float = 0.0

    def __post_init__(self):
        if self.condition not in BOUNDARY_CONDITIONS:
            raise ValueError(f"unknown boundary condition {self.condition!r}")
        if self.condition == "impedance" and self.lambda0 <= 0:
            raise ValueError("impedance condition requires lambda0 > 0")


def _representation_blocks(row_kind, target, source, kernel, eta, same, source_dirichlet):
    """Trace ('trace') or normal-derivative ('deriv') of the source curve's
    combined-layer representation, evaluated on the target curve."""
    def op(kind):
        return _self_block(kind, target, kernel) if same \
            else _cross_block(kind, target, source, kernel)

    m = len(target.s)
    eye = np.eye(m)
    if source_dirichlet:  # representation D - i eta S
        if row_kind == "trace":
            block = op("K") - 1j * eta * op("S")
            if same:
                block += 0.5 * eye
        else:
            block = op("N") - 1j * eta * op("Kp")
            if same:
                block += 0.5j * eta * eye
    else:  # representation S + i eta D
        if row_kind == "trace":
            block = op("S") + 1j * eta * op("K")
            if same:
                block += 0.5j * eta * eye
        else:
            block = op("Kp") + 1j * eta * op("N")
            if same:
                block -= 0.5 * eye
    return block


def _assemble_system(all_nodes, specs, kernel, eta):
    n_per = [len(nd.s) for nd in all_nodes]
    offsets = np.concatenate([[0], np.cumsum(n_per)])
    size = offsets[-1]
    a = np.empty((size, size), dtype=complex)
    for i, (tgt, spec_i) in enumerate(zip(all_nodes, specs)):
        for j, (src, spec_j) in enumerate(zip(all_nodes, specs)):
            same = i == j
            src_dir = spec_j.condition == "dirichlet"
            if spec_i.condition == "dirichlet":
                block = _representation_blocks("trace", tgt, src, kernel, eta,
                                               same, src_dir)
            else:
                block = _representation_blocks("deriv", tgt, src, kernel, eta,
                                               same, src_dir)
                if spec_i.condition == "impedance":
                    block = block + 1j * spec_i.lambda0 * _representation_blocks(
                        "trace", tgt, src, kernel, eta, same, src_dir)
            a[offsets[i]:offsets[i + 1], offsets[j]:offsets[j + 1]] = block
    return a, offsets


def incident_plane_wave(points, directions, k):
    """e^{i k theta . x} for points (m,2) and directions (d,2) -> (m,d)."""
    return np.exp(1j * k * points @ np.asarray(directions, float).T)


def _incident_rhs(all_nodes, specs, directions, k):
    cols = []
    for nd, spec in zip(all_nodes, specs):
        u = incident_plane_wave(nd.points, directions, k)
        if spec.condition == "dirichlet":
            cols.append(-u)
            continue
        dn = 1j * k * (nd.normals @ np.asarray(directions, float).T) * u
        if spec.condition == "neumann":
            cols.append(-dn)
        else:
            cols.append(-(dn + 1j * spec.lambda0 * u))
    return np.vstack(cols)


@dataclass
class ForwardSolution:
    """Densities of the combined-layer representation for one or more
    right-hand sides (columns), plus evaluators for the fields."""

    k: float
    eta: float
    specs: tuple
    all_nodes: tuple
    offsets: np.ndarray
    densities: np.ndarray       # (total_nodes, n_rhs)
    directions: np.ndarray = None  # incident directions when plane-wave driven

    def _density_of(self, idx):
        return self.densities[self.offsets[idx]:self.offsets[idx + 1], :]

    def far_field(self, directions):
        """u_inf(x_hat; rhs), shape (n_dir, n_rhs).

        Normalization: u_s(x) = gamma2(k) (e^{ikr}/sqrt(r)) u_inf(x_hat) +
        O(r^{-3/2}), i.e. u_inf is the plain radiation integral of the layer
        representation (e^{-ik x_hat.y} kernels, no extra constant).
        """
        xh = np.asarray(directions, float)
        out = np.zeros((len(xh), self.densities.shape[1]), dtype=complex)
        for idx, (nd, spec) in enumerate(zip(self.all_nodes, self.specs)):
            n = len(nd.s) // 2
            phase = np.exp(-1j * self.k * xh @ nd.points.T)
            xnu = xh @ nd.normals.T
            if spec.condition == "dirichlet":
                ker = (-1j * self.k * xnu - 1j * self.eta) * phase
            else:
                ker = (1.0 + self.eta * self.k * xnu) * phase
            out += (ker * ((np.pi / n) * nd.speed)[None, :]) @ self._density_of(idx)
        return out

    def scattered_field(self, points):
        """u_s at exterior points; shape (n_pts, n_rhs)."""
        pts = np.atleast_2d(np.asarray(points, float))
        kernel = Kernel(self.k)
        out = np.zeros((len(pts), self.densities.shape[1]), dtype=complex)
        for idx, (nd, spec) in enumerate(zip(self.all_nodes, self.specs)):
            n = len(nd.s) // 2
            d = pts[:, None, :] - nd.points[None, :, :]
            r = np.linalg.norm(d, axis=2)
            phi = kernel.fundamental(r)
            dl = -kernel.grad_factor(r) * np.einsum("ijl,jl->ij", d, nd.normals)
            if spec.condition == "dirichlet":
                ker = dl - 1j * self.eta * phi
            else:
                ker = phi + 1j * self.eta * dl
            out += (ker * ((np.pi / n) * nd.speed)[None, :]) @ self._density_of(idx)
        return out

    def boundary_residual(self, refine=4):
        """Max relative boundary-condition residual on a refined grid.

        Densities are interpolated trigonometrically to refine*2n nodes per
        curve and pushed through freshly assembled operators there; the
        defect against the incident data measures the discretization error.
        """
        if self.directions is None:
            raise ValueError("residual check requires plane-wave data")
        kernel = Kernel(self.k)
        fine_n = [(len(nd.s) // 2) * refine for nd in self.all_nodes]
        fine_nodes = tuple(curve_sample(spec.curve, fn)
                           for spec, fn in zip(self.specs, fine_n))
        dens_fine = []
        for idx in range(len(self.specs)):
            dens_fine.append(_trig_interpolate(self._density_of(idx),
                                               2 * fine_n[idx]))
        a, offsets = _assemble_system(fine_nodes, self.specs, kernel, self.eta)
        rhs = _incident_rhs(fine_nodes, self.specs, self.directions, self.k)
        lhs = a @ np.vstack(dens_fine)
        scale = np.abs(rhs).max()
        return float(np.abs(lhs - rhs).max() / scale)


def _trig_interpolate(values, m_out):
    """Zero-padded FFT interpolation of periodic nodal columns to m_out nodes."""
    m_in = values.shape[0]
    coef = np.fft.fft(values, axis=0)
    half = m_in // 2
    out = np.zeros((m_out, values.shape[1]), dtype=complex)
    out[:half] = coef[:half]
    out[m_out - (half - 1):] = coef[half + 1:]
    # split the Nyquist coefficient symmetrically
    out[half] = 0.5 * coef[half]
    out[m_out - half] += 0.5 * coef[half]
    return np.fft.ifft(out, axis=0) * (m_out / m_in)


def solve_exterior(specs, k, n, directions=None, boundary_data=None,
                   check_residual=True):
    """Solve the exterior scattering problem on one or more disjoint curves.

    specs: iterable of BoundarySpec. Exactly one of directions (incident
    plane-wave directions, shape (d, 2)) or boundary_data (list of nodal
    data arrays per curve, one right-hand side) must be given.
    """
    specs = tuple(specs)
    if not specs:
        raise ValueError("at least one boundary is required")
    if not _pairwise_disjoint([s.curve for s in specs]):
        raise AssemblyError("curves must be pairwise disjoint")
    kernel = Kernel(k)
    eta = float(k)
    all_nodes = tuple(curve_sample(s.curve, n) for s in specs)
    a, offsets = _assemble_system(all_nodes, specs, kernel, eta)
    if (directions is None) == (boundary_data is None):
        raise ValueError("provide exactly one of directions or boundary_data")
    if directions is not None:
        directions = np.atleast_2d(np.asarray(directions, float))
        rhs = _incident_rhs(all_nodes, specs, directions, k)
    else:
        rhs = np.concatenate([np.asarray(bd, complex) for bd in boundary_data])[:, None]
    try:
        dens = linalg.solve_linear(a, rhs)
    except linalg.SingularMatrixError as exc:
        raise SolverError(f"boundary system singular: {exc}") from exc
    sol = ForwardSolution(k=float(k), eta=eta, specs=specs,
                          all_nodes=all_nodes, offsets=offsets,
                          densities=dens if dens.ndim == 2 else dens[:, None],
                          directions=directions)
    if check_residual and directions is not None:
        res = sol.boundary_residual()
        if res > BC_RESIDUAL_TOL:
            raise SolverError(
                f"boundary-condition residual {res:.3e} exceeds {BC_RESIDUAL_TOL}")
    return sol


def far_field_eval(sol, directions):
    """Far field of a ForwardSolution at the given observation directions."""
    return sol.far_field(directions)
