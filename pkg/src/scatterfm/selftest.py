"""Built-in invariant suites behind the `selftest` CLI command.

Each suite re-derives one of the package's load-bearing mathematical
properties at small scale and reports pass/fail with a measured quantity.
The SCATTERFM_SELFTEST_FAULT environment variable can inject a known
defect (value 'single-layer-sign') to exercise the failure path.
"""

import os

import numpy as np

from . import linalg, specfun
from .analytic import disc_far_field
from .farfield_ops import DirectionGrid, FarFieldMatrix, write_far_field, read_far_field
from .factorization import build_sharp, picard_indicator
from .forward_bie import assemble_boundary_operator, solve_exterior, BoundarySpec
from .forward_medium import solve_medium_obstacle
from .geometry import circle, kite, select_phase, ContrastSpec


def _rng():
    return np.random.default_rng(1234)


def _suite_linalg_solve_residual():
    rng = _rng()
    worst = 0.0
    for dim in (4, 32, 128, 256):
        a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        a += dim * np.eye(dim)  # keep it well-conditioned
        x0 = rng.standard_normal((dim, 3)) + 1j * rng.standard_normal((dim, 3))
        b = a @ x0
        x = linalg.solve_linear(a, b)
        worst = max(worst, np.abs(a @ x - b).max() / np.abs(b).max())
    return worst <= 1e-9, f"max relative solve residual {worst:.2e}"


def _suite_linalg_abs_operator_psd():
    rng = _rng()
    worst = 0.0
    fixed = 0.0
    for dim in (8, 32):
        m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        herm = 0.5 * (m + m.conj().T)
        absval = linalg.abs_operator(herm)
        evals = np.linalg.eigvalsh(absval)
        worst = min(worst, evals.min() / max(1.0, np.abs(herm).max()))
        psd = m.conj().T @ m
        fixed = max(fixed, np.abs(linalg.abs_operator(psd) - psd).max())
    ok = worst >= -1e-10 and fixed <= 1e-9 * 32
    return ok, f"min eig ratio {worst:.2e}, PSD fixed-point defect {fixed:.2e}"


def _suite_specfun_wronskian():
    worst = 0.0
    for x in (0.5, 1.0, 5.0):
        for n in (0, 1, 5):
            jp = 0.5 * (specfun.bessel_j(abs(n - 1), x)
                        - specfun.bessel_j(n + 1, x)) if n else -specfun.bessel_j(1, x)
            yp = 0.5 * (specfun.bessel_y(abs(n - 1), x)
                        - specfun.bessel_y(n + 1, x)) if n else -specfun.bessel_y(1, x)
            w = specfun.bessel_j(n, x) * yp - jp * specfun.bessel_y(n, x)
            worst = max(worst, abs(w - 2.0 / (np.pi * x)))
    return worst <= 1e-10, f"max Wronskian defect {worst:.2e}"


def _suite_specfun_recurrence():
    worst = 0.0
    for x in (0.3, 2.0, 11.0):
        for n in range(1, 12):
            worst = max(worst, abs(specfun.bessel_j(n - 1, x) + specfun.bessel_j(n + 1, x)
                                   - 2 * n / x * specfun.bessel_j(n, x)))
            worst = max(worst, abs(specfun.bessel_i(n - 1, x) - specfun.bessel_i(n + 1, x)
                                   - 2 * n / x * specfun.bessel_i(n, x)))
    return worst <= 1e-10, f"max recurrence defect {worst:.2e}"


def _suite_geometry_circle_containment():
    from .geometry import ellipse, _contained
    rng = _rng()
    bad = checked = 0
    while checked < 100:
        c_in = rng.uniform(-3, 3, 2)
        c_out = rng.uniform(-3, 3, 2)
        r_in, r_out = rng.uniform(0.2, 2.0), rng.uniform(0.2, 3.0)
        gap = r_out - (np.linalg.norm(c_in - c_out) + r_in)
        if abs(gap) < 1e-6:  # stay off the margin boundary
            continue
        checked += 1
        exact_inside = gap > 0
        # equal-axes ellipse forces the dense-sampling route
        violations = []
        _contained(ellipse(c_in, r_in, r_in), circle(c_out, r_out),
                   "inner", "outer", violations)
        if exact_inside != (not violations):
            bad += 1
    return bad == 0, f"{bad}/100 sampled-vs-exact circle checks disagree"


def _suite_geometry_phase_selection():
    cases = [(-0.5 + 0.0j, np.pi, "T1.4"), (0.5 + 0.0j, 0.0, "T4.6")]
    for q0, t_expect, variant_expect in cases:
        sel = select_phase(ContrastSpec("constant", q0, circle((0, 0), 1.0)))
        if abs(sel.t - t_expect) > 1e-9 or sel.variant != variant_expect:
            return False, f"q0={q0}: got t={sel.t:.6f}, variant={sel.variant}"
        if sel.margin < 0.999:
            return False, f"q0={q0}: margin {sel.margin:.4f} below 1"
    return True, "constant-contrast phases and variants as expected"


def _suite_single_layer_coercivity_i():
    op = assemble_boundary_operator("S", [kite((0, 0))], "i", 24)
    sym = op.weighted_symmetric()
    sym = 0.5 * (sym + sym.conj().T).real
    if os.environ.get("SCATTERFM_SELFTEST_FAULT") == "single-layer-sign":
        sym = -sym
    low = np.linalg.eigvalsh(sym).min()
    return low > 0.0, f"single-layer coercivity at wavenumber i: min eig {low:.3e}"


def _suite_hypersingular_coercivity_i():
    op = assemble_boundary_operator("N", [kite((0, 0))], "i", 24)
    sym = op.weighted_symmetric()
    sym = 0.5 * (sym + sym.conj().T).real
    high = np.linalg.eigvalsh(sym).max()
    return high < 0.0, f"hypersingular coercivity at wavenumber i: max eig {high:.3e}"


def _suite_single_layer_imaginary_sign():
    rng = _rng()
    op = assemble_boundary_operator("S", [kite((0, 0))], 2.0, 24)
    w = op.weights
    worst = -np.inf
    for _ in range(20):
        phi = rng.standard_normal(len(w)) + 1j * rng.standard_normal(len(w))
        form = np.sum(w * phi * np.conj(op.matrix @ phi))
        worst = max(worst, form.imag / np.sum(w * np.abs(phi) ** 2))
    return worst <= 1e-10, f"max Im<phi, S phi>_w / |phi|^2 = {worst:.3e}"


def _suite_disc_oracle_dirichlet():
    k, n = 2.0, 64
    grid = DirectionGrid(32)
    sol = solve_exterior([BoundarySpec(circle((0, 0), 1.0), "dirichlet")], k, n,
                         directions=grid.directions)
    ff = sol.far_field(grid.directions)
    oracle = disc_far_field("dirichlet", 1.0, k, (0, 0), grid.angles, grid.angles)
    err = np.linalg.norm(ff - oracle) / np.linalg.norm(oracle)
    return err <= 1e-6, f"sound-soft disc far-field error {err:.2e}"


def _suite_impedance_imaginary_positive():
    grid = DirectionGrid(32)
    sol = solve_exterior([BoundarySpec(circle((0.4, 0.5), 0.4), "impedance", 1.0)],
                         2.0, 32, directions=grid.directions)
    f = sol.far_field(grid.directions)
    im = (f - f.conj().T) / 2j
    evals = np.linalg.eigvalsh(im)
    top = evals.max()
    resolved = evals[np.abs(evals) > 1e-12 * top]
    ok = top > 0 and np.all(resolved > 0) and evals.min() >= -1e-12 * top
    return ok, (f"impedance operator Im-part: resolved eigenvalues positive, "
                f"min {evals.min():.2e}, max {top:.2e}")


def _suite_farfield_reciprocity():
    grid = DirectionGrid(32)
    sol = solve_exterior([BoundarySpec(kite((-2.5, 0.0)), "dirichlet"),
                          BoundarySpec(circle((2.5, 0.0), 1.0), "neumann")],
                         2.0, 48, directions=grid.directions)
    f = sol.far_field(grid.directions)
    flip = (np.arange(grid.n) + grid.n // 2) % grid.n
    err = np.abs(f - f[np.ix_(flip, flip)].T).max() / np.abs(f).max()
    return err <= 1e-6, f"reciprocity defect {err:.2e}"


def _suite_medium_zero_contrast():
    grid = DirectionGrid(16)
    om2 = circle((1.0, -0.5), 1.0)
    solm = solve_medium_obstacle(None, om2, 2.0, grid.directions, m=8, n=32)
    solb = solve_exterior([BoundarySpec(om2, "dirichlet")], 2.0, 32,
                          directions=grid.directions)
    err = np.abs(solm.far_field(grid.directions)
                 - solb.far_field(grid.directions)).max()
    return err <= 1e-8, f"zero-contrast reduction defect {err:.2e}"


def _suite_sharp_psd_scaling():
    rng = _rng()
    grid = DirectionGrid(16)
    m = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
    ffm = FarFieldMatrix(grid=grid, k=2.0, entries=m, provenance=("test",))
    sharp = build_sharp(ffm)
    if sharp.eigenvalues.min() < 0:
        return False, "sharp operator clamp failed"
    sharp2 = build_sharp(FarFieldMatrix(grid=grid, k=2.0, entries=2.0 * m,
                                        provenance=("test",)))
    z = (0.3, -0.7)
    w1, w2 = picard_indicator(sharp, z), picard_indicator(sharp2, z)
    ok = abs(w2 - 2.0 * w1) <= 1e-12 * abs(w2)
    return ok, f"indicator homogeneity defect {abs(w2 - 2 * w1):.2e}"


def _suite_ffop_roundtrip(tmpdir="."):
    import tempfile
    rng = _rng()
    grid = DirectionGrid(16)
    ffm = FarFieldMatrix(grid=grid, k=1.5,
                         entries=rng.standard_normal((16, 16))
                         + 1j * rng.standard_normal((16, 16)),
                         provenance=("roundtrip",), noise=0.01, seed=7)
    with tempfile.TemporaryDirectory() as td:
        path = os.path.join(td, "op.ffop")
        write_far_field(ffm, path)
        back = read_far_field(path)
        write_far_field(back, path + "2")
        same = open(path, "rb").read() == open(path + "2", "rb").read()
        exact = np.array_equal(back.entries, ffm.entries)
    return same and exact, "write/read/write round trip bitwise stable"


SUITES = (
    ("linalg-solve-residual", _suite_linalg_solve_residual),
    ("linalg-abs-operator-psd", _suite_linalg_abs_operator_psd),
    ("specfun-wronskian", _suite_specfun_wronskian),
    ("specfun-recurrence", _suite_specfun_recurrence),
    ("geometry-circle-containment", _suite_geometry_circle_containment),
    ("geometry-phase-selection", _suite_geometry_phase_selection),
    ("single-layer-coercivity-wavenumber-i", _suite_single_layer_coercivity_i),
    ("hypersingular-coercivity-wavenumber-i", _suite_hypersingular_coercivity_i),
    ("single-layer-imaginary-sign", _suite_single_layer_imaginary_sign),
    ("disc-oracle-dirichlet-farfield", _suite_disc_oracle_dirichlet),
    ("impedance-farfield-imaginary-positive", _suite_impedance_imaginary_positive),
    ("farfield-reciprocity", _suite_farfield_reciprocity),
    ("medium-zero-contrast-reduction", _suite_medium_zero_contrast),
    ("sharp-operator-psd-scaling", _suite_sharp_psd_scaling),
    ("ffop-file-roundtrip", _suite_ffop_roundtrip),
)


def run_suites():
    """Run all invariant suites; returns list of (name, passed, detail)."""
    results = []
    for name, fn in SUITES:
        try:
            passed, detail = fn()
        except Exception as exc:  # a crash is a failure, not an abort
            passed, detail = False, f"exception: {exc!r}"
        results.append((name, bool(passed), detail))
    return results
