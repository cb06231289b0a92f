"""Scene description: boundary curves, contrast, and geometric validation.

Supported boundary shapes are the three standard analytic test curves
(circle, ellipse, kite), all parametrized counterclockwise over [0, 2pi)
with outward unit normals. Containment and disjointness checks are done
by dense boundary sampling with a signed-distance margin; circle pairs
additionally get exact center/radius arithmetic.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

VALIDATION_SAMPLES = 4096
VALIDATION_MARGIN = 1e-9
PHASE_GRID = 4096
PHASE_MARGIN_FLOOR = 0.05

CURVE_KINDS = ("circle", "ellipse", "kite")
SCENE_CASES = ("mixed", "medium")
VARIANTS = ("T1.2", "T1.4", "T3.6", "T4.6", "baseline-liu", "baseline-kirschliu")
MIXED_VARIANTS = ("T1.2", "T3.6", "baseline-liu")
MEDIUM_VARIANTS = ("T1.4", "T4.6", "baseline-kirschliu")


class SceneValidationError(ValueError):
    """A scene violates the geometric or physical admissibility checks."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class NoAdmissiblePhaseError(ValueError):
    """No rotation phase reaches the minimum contrast margin."""


def _rotation(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class Curve:
    """Closed analytic boundary curve.

    kind:     'circle' | 'ellipse' | 'kite'
    center:   2-vector
    params:   (radius,) for circle, (a, b) semi-axes for ellipse,
              (scale,) for kite
    rotation: radians, counterclockwise
    """

    kind: str
    center: np.ndarray
    params: tuple
    rotation: float = 0.0

    def __post_init__(self):
        if self.kind not in CURVE_KINDS:
            raise ValueError(f"unknown curve kind {self.kind!r}")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.center.shape != (2,):
            raise ValueError("center must be a 2-vector")
        if any(p <= 0 for p in self.params):
            raise ValueError("curve scale parameters must be positive")

    # -- base parametrization (before rotation/translation) -----------------

    def _base(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "circle":
            r = self.params[0]
            return np.stack([r * np.cos(s), r * np.sin(s)], axis=-1)
        if self.kind == "ellipse":
            a, b = self.params
            return np.stack([a * np.cos(s), b * np.sin(s)], axis=-1)
        c = self.params[0]
        return np.stack([c * (np.cos(s) + 0.65 * np.cos(2 * s) - 0.65),
                         c * 1.5 * np.sin(s)], axis=-1)

    def _base_d1(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "circle":
            r = self.params[0]
            return np.stack([-r * np.sin(s), r * np.cos(s)], axis=-1)
        if self.kind == "ellipse":
            a, b = self.params
            return np.stack([-a * np.sin(s), b * np.cos(s)], axis=-1)
        c = self.params[0]
        return np.stack([c * (-np.sin(s) - 1.3 * np.sin(2 * s)),
                         c * 1.5 * np.cos(s)], axis=-1)

    def _base_d2(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "circle":
            r = self.params[0]
            return np.stack([-r * np.cos(s), -r * np.sin(s)], axis=-1)
        if self.kind == "ellipse":
            a, b = self.params
            return np.stack([-a * np.cos(s), -b * np.sin(s)], axis=-1)
        c = self.params[0]
        return np.stack([c * (-np.cos(s) - 2.6 * np.cos(2 * s)),
                         c * -1.5 * np.sin(s)], axis=-1)

    # -- public evaluators ---------------------------------------------------

    def point(self, s):
        return self._base(s) @ _rotation(self.rotation).T + self.center

    def derivative(self, s):
        return self._base_d1(s) @ _rotation(self.rotation).T

    def second_derivative(self, s):
        return self._base_d2(s) @ _rotation(self.rotation).T

    def normal(self, s):
        """Outward unit normal (curves are counterclockwise)."""
        d = self.derivative(s)
        speed = np.linalg.norm(d, axis=-1, keepdims=True)
        return np.stack([d[..., 1], -d[..., 0]], axis=-1) / speed

    # -- point queries ---------------------------------------------------

    def polygon(self, n=VALIDATION_SAMPLES):
        s = 2.0 * np.pi * np.arange(n) / n
        return self.point(s)

    def contains(self, points):
        """True for points strictly inside; exact for circle and ellipse."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        rel = (pts - self.center) @ _rotation(self.rotation)
        if self.kind == "circle":
            inside = np.hypot(rel[:, 0], rel[:, 1]) < self.params[0]
        elif self.kind == "ellipse":
            a, b = self.params
            inside = (rel[:, 0] / a) ** 2 + (rel[:, 1] / b) ** 2 < 1.0
        else:
            inside = _point_in_polygon(rel, self._base(
                2.0 * np.pi * np.arange(VALIDATION_SAMPLES) / VALIDATION_SAMPLES))
        return inside if np.asarray(points).ndim > 1 else bool(inside[0])

    def boundary_distance(self, points):
        """Unsigned distance to the boundary; exact for circle."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "circle":
            d = np.abs(np.hypot(*(pts - self.center).T) - self.params[0])
        else:
            d = _polygon_distance(pts, self.polygon())
        return d if np.asarray(points).ndim > 1 else float(d[0])

    def signed_distance(self, points):
        """Negative inside, positive outside."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        d = self.boundary_distance(pts)
        sign = np.where(self.contains(pts), -1.0, 1.0)
        out = sign * d
        return out if np.asarray(points).ndim > 1 else float(out[0])

    def bounding_box(self):
        poly = self.polygon(1024)
        return (poly[:, 0].min(), poly[:, 0].max(),
                poly[:, 1].min(), poly[:, 1].max())


def circle(center, radius):
    return Curve("circle", np.asarray(center, float), (float(radius),))


def ellipse(center, a, b, rotation=0.0):
    return Curve("ellipse", np.asarray(center, float), (float(a), float(b)), rotation)


def kite(center, scale=1.0, rotation=0.0):
    return Curve("kite", np.asarray(center, float), (float(scale),), rotation)


def _point_in_polygon(points, poly):
    """Vectorized even-odd crossing test; points shape (m,2), poly (n,2)."""
    x, y = points[:, 0][:, None], points[:, 1][:, None]
    x0, y0 = poly[:, 0][None, :], poly[:, 1][None, :]
    x1, y1 = np.roll(poly[:, 0], -1)[None, :], np.roll(poly[:, 1], -1)[None, :]
    crosses = ((y0 <= y) != (y1 <= y)) & (
        x < x0 + (y - y0) * (x1 - x0) / (y1 - y0))
    return crosses.sum(axis=1) % 2 == 1


def _polygon_distance(points, poly, chunk=512):
    """Distance from each point to a closed polyline, chunked over points."""
    a = poly
    b = np.roll(poly, -1, axis=0)
    ab = b - a
    ab_sq = np.maximum((ab * ab).sum(axis=1), 1e-300)
    out = np.empty(len(points))
    for lo in range(0, len(points), chunk):
        p = points[lo:lo + chunk]
        ap = p[:, None, :] - a[None, :, :]
        t = np.clip((ap * ab[None, :, :]).sum(axis=2) / ab_sq[None, :], 0.0, 1.0)
        nearest = a[None, :, :] + t[:, :, None] * ab[None, :, :]
        d = np.linalg.norm(p[:, None, :] - nearest, axis=2)
        out[lo:lo + chunk] = d.min(axis=1)
    return out


# -- boundary sampling (Nystroem grid) ---------------------------------------

@dataclass(frozen=True)
class BoundaryNodes:
    """Curve data at the 2n equispaced parameter nodes s_j = pi j / n."""

    curve: Curve
    s: np.ndarray
    points: np.ndarray      # (2n, 2)
    d1: np.ndarray          # (2n, 2) first parameter derivative
    d2: np.ndarray          # (2n, 2) second parameter derivative
    normals: np.ndarray     # (2n, 2) outward unit normals
    speed: np.ndarray       # (2n,)   |p'(s)|
    curvature: np.ndarray   # (2n,)   signed curvature


def curve_sample(curve, n):
    """Evaluate a curve at the 2n-point periodic trapezoidal grid."""
    if n < 8 or n % 2 != 0:
        raise ValueError(f"n must be even and >= 8, got {n}")
    s = np.pi * np.arange(2 * n) / n
    p = curve.point(s)
    d1 = curve.derivative(s)
    d2 = curve.second_derivative(s)
    speed = np.linalg.norm(d1, axis=1)
    normals = np.stack([d1[:, 1], -d1[:, 0]], axis=1) / speed[:, None]
    curvature = (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / speed ** 3
    return BoundaryNodes(curve=curve, s=s, points=p, d1=d1, d2=d2,
                         normals=normals, speed=speed, curvature=curvature)


# -- contrast ---------------------------------------------------------------

@dataclass(frozen=True)
class ContrastSpec:
    """Contrast of the penetrable component, supported on omega1.

    form 'constant':    q(x) = q0 inside the support curve
    form 'radial-bump': q(x) = q0 * (1 - (r/R)^2) on a circular support
    """

    form: str
    q0: complex
    support: Curve

    def __post_init__(self):
        if self.form not in ("constant", "radial-bump"):
            raise ValueError(f"unknown contrast form {self.form!r}")
        if self.form == "radial-bump" and self.support.kind != "circle":
            raise ValueError("radial-bump contrast requires a circular support")
        if abs(self.q0) == 0.0:
            raise ValueError("contrast q0 must be nonzero")
        if self.q0.imag < 0.0:
            raise ValueError("contrast must have Im q0 >= 0")

    def form_value(self, points):
        """The contrast form without the support indicator (bump clamped >= 0)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.form == "constant":
            return np.full(len(pts), self.q0, dtype=complex)
        r = np.hypot(*(pts - self.support.center).T)
        shape = np.maximum(1.0 - (r / self.support.params[0]) ** 2, 0.0)
        return self.q0 * shape

    def evaluate(self, points):
        """Contrast values at points; zero outside the support."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        inside = self.support.contains(pts)
        return np.where(inside, self.form_value(pts), 0.0 + 0.0j)

    def interior_samples(self, count=10_000, seed=20240229):
        """Contrast values on a deterministic sample of the support interior."""
        rng = np.random.default_rng(seed)
        x0, x1, y0, y1 = self.support.bounding_box()
        samples = []
        while sum(len(s) for s in samples) < count:
            pts = rng.uniform((x0, y0), (x1, y1), size=(count, 2))
            inside = self.support.contains(pts)
            # keep well inside: the phase margin is over compact subsets
            keep = inside & (self.support.boundary_distance(pts) > 1e-3)
            samples.append(self.evaluate(pts[keep]))
        return np.concatenate(samples)[:count]


@dataclass(frozen=True)
class PhaseSelection:
    t: float
    margin: float
    variant: str  # 'T1.4' or 'T4.6'


def select_phase(contrast, grid=PHASE_GRID):
    """Pick the rotation phase t maximizing the worst-case contrast margin.

    The margin is C(t) = min over interior samples of Re(e^{-it} q)/|q|.
    t is searched on a uniform grid over [0, 2pi) with the two boundary
    phases pi/2 and 3pi/2 excluded (both admissibility intervals are open
    there). Classification: t strictly inside (pi/2, 3pi/2) selects the
    sign-reversed variant 'T1.4', anything else 'T4.6'.
    """
    qs = contrast.interior_samples(count=4096)
    qs = qs[np.abs(qs) > 0]
    unit = qs / np.abs(qs)
    ts = 2.0 * np.pi * np.arange(grid) / grid
    admissible = (np.abs(ts - np.pi / 2) > 1e-12) & (np.abs(ts - 3 * np.pi / 2) > 1e-12)
    ts = ts[admissible]
    margins = np.real(np.exp(-1j * ts)[:, None] * unit[None, :]).min(axis=1)
    best = int(np.argmax(margins))
    t, margin = float(ts[best]), float(margins[best])
    if margin < PHASE_MARGIN_FLOOR:
        raise NoAdmissiblePhaseError(
            f"best contrast margin {margin:.4f} below floor {PHASE_MARGIN_FLOOR}")
    variant = "T1.4" if (np.pi / 2 < t < 3 * np.pi / 2) else "T4.6"
    return PhaseSelection(t=t, margin=margin, variant=variant)


# -- scene -------------------------------------------------------------------

@dataclass(frozen=True)
class Scene:
    """Geometry and physics of the two-object scatterer plus a-priori domains."""

    case: str                      # 'mixed' | 'medium'
    omega1: Curve
    omega2: Optional[Curve]
    b2: Curve
    k: float
    lambda0: float
    variant: str
    b1: Optional[Curve] = None
    b3: Optional[Curve] = None
    contrast: Optional[ContrastSpec] = None

    def __post_init__(self):
        if self.case not in SCENE_CASES:
            raise ValueError(f"unknown case {self.case!r}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")

    @property
    def omega1_condition(self):
        return "dirichlet" if self.case == "mixed" else "medium"

    @property
    def omega2_condition(self):
        return "neumann" if self.case == "mixed" else "dirichlet"


@dataclass
class ValidationReport:
    ok: bool
    violations: list = field(default_factory=list)

    def raise_if_failed(self):
        if not self.ok:
            raise SceneValidationError(self.violations)


def _contained(inner, outer, label_inner, label_outer, violations):
    """closure(inner) subset of open outer, with margin."""
    if inner.kind == "circle" and outer.kind == "circle":
        gap = outer.params[0] - (np.linalg.norm(inner.center - outer.center)
                                 + inner.params[0])
        if gap < VALIDATION_MARGIN:
            violations.append(f"closure({label_inner}) not contained in {label_outer}")
        return
    pts_in = inner.polygon(VALIDATION_SAMPLES)
    ok = np.all(outer.contains(pts_in)) and \
        outer.boundary_distance(pts_in).min() >= VALIDATION_MARGIN
    # guard against the outer boundary dipping into the inner region
    pts_out = outer.polygon(VALIDATION_SAMPLES)
    ok = ok and not np.any(inner.contains(pts_out))
    if not ok:
        violations.append(f"closure({label_inner}) not contained in {label_outer}")


def _disjoint(a, b, label_a, label_b, violations):
    """closure(a) and closure(b) disjoint, with margin."""
    if a.kind == "circle" and b.kind == "circle":
        gap = np.linalg.norm(a.center - b.center) - (a.params[0] + b.params[0])
        if gap < VALIDATION_MARGIN:
            violations.append(f"closure({label_a}) intersects closure({label_b})")
        return
    pts_a = a.polygon(VALIDATION_SAMPLES)
    pts_b = b.polygon(VALIDATION_SAMPLES)
    ok = (not np.any(b.contains(pts_a))) and (not np.any(a.contains(pts_b))) \
        and b.boundary_distance(pts_a).min() >= VALIDATION_MARGIN
    if not ok:
        violations.append(f"closure({label_a}) intersects closure({label_b})")


def validate_scene(scene):
    """Check the geometric assumptions required by the scene's variant."""
    v = []
    if scene.k <= 0.0:
        v.append("wavenumber k must be positive")
    if scene.lambda0 <= 0.0:
        v.append("impedance lambda0 must be positive")
    if scene.case == "mixed" and scene.variant not in MIXED_VARIANTS:
        v.append(f"variant {scene.variant} requires the medium case")
    if scene.case == "medium" and scene.variant not in MEDIUM_VARIANTS:
        v.append(f"variant {scene.variant} requires the mixed case")
    if scene.omega2 is None:
        v.append("omega2 is required")
    if scene.case == "medium":
        if scene.contrast is None:
            v.append("medium case requires a contrast")
        else:
            try:
                # re-run the ContrastSpec invariants against current fields
                ContrastSpec(scene.contrast.form, scene.contrast.q0,
                             scene.contrast.support)
            except ValueError as exc:
                v.append(f"contrast invalid: {exc}")

    needs_b1 = scene.variant in ("T1.2", "T3.6")
    needs_b3 = scene.variant in ("T1.2", "T1.4")
    if needs_b1 and scene.b1 is None:
        v.append(f"missing-domain: variant {scene.variant} requires b1")
    if needs_b3 and scene.b3 is None:
        v.append(f"missing-domain: variant {scene.variant} requires b3")

    if not v:
        if needs_b1:
            _contained(scene.b1, scene.omega1, "B1", "Omega1", v)
        _contained(scene.omega2, scene.b2, "Omega2", "B2", v)
        _disjoint(scene.omega1, scene.b2, "Omega1", "B2", v)
        if needs_b3:
            _contained(scene.b3, scene.b2, "B3", "B2", v)
    return ValidationReport(ok=not v, violations=v)
