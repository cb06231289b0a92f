"""Command-line driver: scene configs, data synthesis, reconstruction,
disc oracles and the invariant selftest.

Exit codes: 0 ok, 1 selftest failure, 2 validation/solver error,
3 data-consistency error, 4 I/O error.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import analytic, factorization, farfield_ops, selftest
from .farfield_ops import (DirectionGrid, FarFieldMatrix, VARIANT_PARTS,
                           NormalizationMismatchError, MissingDomainError,
                           FileFormatError)
from .forward_bie import AssemblyError, SolverError
from .geometry import (Curve, ContrastSpec, Scene, SceneValidationError,
                       NoAdmissiblePhaseError, MIXED_VARIANTS, MEDIUM_VARIANTS,
                       select_phase, validate_scene)

EXIT_OK = 0
EXIT_SELFTEST = 1
EXIT_VALIDATION = 2
EXIT_DATA = 3
EXIT_IO = 4

DEFAULT_DATA_NODES = 96        # synthesis resolution (1.5x reconstruction)
DEFAULT_RECON_NODES = 64


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# scene config parsing (strict: unknown keys rejected)
# ---------------------------------------------------------------------------

_SHAPE_KEYS = {"kind", "center", "radius", "semi_axes", "rotation", "q"}
_SCENE_KEYS = {"case", "k", "lambda0", "variant", "omega1", "omega2",
               "b1", "b2", "b3"}


def _parse_shape(obj, name, allow_q=False):
    if not isinstance(obj, dict):
        raise CliError(f"{name}: shape must be an object", EXIT_VALIDATION)
    allowed = _SHAPE_KEYS if allow_q else _SHAPE_KEYS - {"q"}
    unknown = set(obj) - allowed
    if unknown:
        raise CliError(f"{name}: unknown keys {sorted(unknown)}", EXIT_VALIDATION)
    try:
        kind = obj["kind"]
        center = obj.get("center", [0.0, 0.0])
        rotation = float(obj.get("rotation", 0.0))
        if kind == "circle":
            params = (float(obj["radius"]),)
        elif kind == "ellipse":
            a, b = obj["semi_axes"]
            params = (float(a), float(b))
        elif kind == "kite":
            params = (float(obj.get("radius", 1.0)),)
        else:
            raise CliError(f"{name}: unknown shape kind {kind!r}", EXIT_VALIDATION)
        return Curve(kind, np.asarray(center, float), params, rotation)
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(f"{name}: invalid shape ({exc})", EXIT_VALIDATION) from None


def load_scene(path):
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read scene file: {exc}", EXIT_IO) from None
    except json.JSONDecodeError as exc:
        raise CliError(f"scene file is not valid JSON: {exc}", EXIT_VALIDATION) from None
    if not isinstance(cfg, dict):
        raise CliError("scene config must be a JSON object", EXIT_VALIDATION)
    unknown = set(cfg) - _SCENE_KEYS
    if unknown:
        raise CliError(f"scene config: unknown keys {sorted(unknown)}",
                       EXIT_VALIDATION)
    for key in ("case", "k", "lambda0", "variant", "omega1", "omega2", "b2"):
        if key not in cfg:
            raise CliError(f"scene config: missing key {key!r}", EXIT_VALIDATION)
    omega1 = _parse_shape(cfg["omega1"], "omega1", allow_q=True)
    contrast = None
    if "q" in cfg["omega1"]:
        qobj = cfg["omega1"]["q"]
        unknown = set(qobj) - {"form", "re", "im"}
        if unknown:
            raise CliError(f"omega1.q: unknown keys {sorted(unknown)}",
                           EXIT_VALIDATION)
        try:
            contrast = ContrastSpec(qobj.get("form", "constant"),
                                    complex(float(qobj.get("re", 0.0)),
                                            float(qobj.get("im", 0.0))),
                                    omega1)
        except ValueError as exc:
            raise CliError(f"omega1.q: {exc}", EXIT_VALIDATION) from None
    try:
        scene = Scene(
            case=cfg["case"],
            omega1=omega1,
            omega2=_parse_shape(cfg["omega2"], "omega2"),
            b2=_parse_shape(cfg["b2"], "b2"),
            b1=_parse_shape(cfg["b1"], "b1") if "b1" in cfg else None,
            b3=_parse_shape(cfg["b3"], "b3") if "b3" in cfg else None,
            k=float(cfg["k"]),
            lambda0=float(cfg["lambda0"]),
            variant=cfg["variant"],
            contrast=contrast,
        )
    except ValueError as exc:
        raise CliError(f"scene config: {exc}", EXIT_VALIDATION) from None
    return scene


def _validated_scene(path, variant_override=None):
    scene = load_scene(path)
    if variant_override is not None:
        from dataclasses import replace
        scene = replace(scene, variant=variant_override)
    report = validate_scene(scene)
    if not report.ok:
        raise CliError("scene validation failed:\n  "
                       + "\n  ".join(report.violations), EXIT_VALIDATION)
    return scene


def _checked_output(path, force):
    if os.path.exists(path) and not force:
        raise CliError(f"refusing to overwrite {path} (use --force)", EXIT_IO)
    return path


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_forward(args):
    scene = _validated_scene(args.scene, args.variant)
    grid = DirectionGrid(args.ndirs)
    try:
        measured = farfield_ops.assemble_far_field_operator(
            scene, grid, args.nodes, medium_cells=args.cells)
    except (SolverError, AssemblyError) as exc:
        raise CliError(f"forward solver failed: {exc}", EXIT_VALIDATION) from None
    if args.noise > 0.0:
        measured = farfield_ops.add_noise(measured, args.noise, args.seed)
    out = _checked_output(args.out, args.force)
    try:
        farfield_ops.write_far_field(measured, out)
    except OSError as exc:
        raise CliError(f"cannot write {out}: {exc}", EXIT_IO) from None
    print(f"wrote {out}: n={grid.n} k={scene.k} provenance={list(measured.provenance)}"
          + (f" noise={measured.noise} seed={measured.seed}"
             if measured.noise else ""))
    return EXIT_OK


def _phase_for(scene):
    """Rotation phase t for the sharp operator, per scene case/variant."""
    if scene.case == "mixed":
        return 0.0
    sel = select_phase(scene.contrast)
    if scene.variant in ("T1.4", "T4.6") and sel.variant != scene.variant:
        raise CliError(
            f"contrast phase t={sel.t:.4f} selects variant {sel.variant}, "
            f"but the scene requests {scene.variant}", EXIT_VALIDATION)
    return sel.t


def cmd_reconstruct(args):
    scene = _validated_scene(args.scene, args.variant)
    try:
        measured = farfield_ops.read_far_field(args.data)
    except OSError as exc:
        raise CliError(f"cannot read {args.data}: {exc}", EXIT_IO) from None
    except FileFormatError as exc:
        raise CliError(f"{args.data}: {exc}", EXIT_DATA) from None
    if abs(measured.k - scene.k) > 1e-12 * max(1.0, scene.k):
        raise CliError(f"wavenumber mismatch: file k={measured.k}, "
                       f"scene k={scene.k}", EXIT_DATA)
    if measured.normalization != farfield_ops.NORMALIZATION:
        raise CliError(f"normalization mismatch: {measured.normalization}",
                       EXIT_DATA)
    grid = measured.grid
    try:
        t = _phase_for(scene)
        parts = {kind: farfield_ops.artificial_operator(kind, scene, grid,
                                                        args.nodes)
                 for kind in VARIANT_PARTS[scene.variant]}
        modified = farfield_ops.modify_operator(scene.variant, measured, parts)
    except MissingDomainError as exc:
        raise CliError(str(exc), EXIT_VALIDATION) from None
    except NoAdmissiblePhaseError as exc:
        raise CliError(f"phase selection failed: {exc}", EXIT_VALIDATION) from None
    except NormalizationMismatchError as exc:
        raise CliError(f"operator sum failed: {exc}", EXIT_DATA) from None
    except (SolverError, AssemblyError) as exc:
        raise CliError(f"artificial operator solve failed: {exc}",
                       EXIT_VALIDATION) from None

    sharp = factorization.build_sharp(modified, t)
    window = tuple(args.grid[:4])
    res = int(args.grid[4])
    grid_out = factorization.reconstruct(sharp, window, res,
                                         mask_curve=scene.b2,
                                         eps_rel=args.eps_rel)
    out = _checked_output(args.out, args.force)
    try:
        factorization.write_indicator_csv(grid_out, out)
        if args.pgm:
            factorization.write_indicator_pgm(grid_out,
                                              _checked_output(args.pgm, args.force))
    except OSError as exc:
        raise CliError(f"cannot write output: {exc}", EXIT_IO) from None
    metrics = factorization.threshold_and_score(grid_out, scene.omega1)
    unmasked = int((~grid_out.mask).sum())
    print(f"wrote {out}: {unmasked} sampled points "
          f"({res}x{res} grid minus mask), variant={scene.variant}, t={t:.6f}")
    print(f"metrics: contrast={metrics.contrast:.3f} "
          f"jaccard={metrics.jaccard:.3f} "
          f"best_threshold={metrics.best_threshold:.1f}")
    return EXIT_OK


def cmd_oracle(args):
    grid = DirectionGrid(args.ndirs)
    q0 = None
    if args.condition == "transmission":
        q0 = complex(args.q_re, args.q_im)
    cm = analytic.disc_coefficients(args.condition, args.radius, args.k,
                                    lambda0=args.lambda0, q0=q0)
    print("m   c_m")
    for m, c in enumerate(cm):
        print(f"{m:<3d} {c.real:+.12e} {c.imag:+.12e}")
        if m >= 20:
            break
    entries = analytic.disc_far_field(args.condition, args.radius, args.k,
                                      args.center, grid.angles, grid.angles,
                                      lambda0=args.lambda0, q0=q0)
    ffm = FarFieldMatrix(grid=grid, k=args.k, entries=entries,
                         provenance=(f"oracle:{args.condition}"
                                     f"(disc r={args.radius})",))
    if args.out:
        out = _checked_output(args.out, args.force)
        farfield_ops.write_far_field(ffm, out)
        print(f"wrote {out}")
    return EXIT_OK


def cmd_selftest(args):
    results = selftest.run_suites()
    if args.json:
        print(json.dumps([{"suite": n, "passed": p, "detail": d}
                          for n, p, d in results], indent=2))
    else:
        for name, passed, detail in results:
            print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
    failed = [n for n, p, _ in results if not p]
    if failed:
        print(f"{len(failed)} suite(s) failed: {', '.join(failed)}",
              file=sys.stderr)
        return EXIT_SELFTEST
    print(f"all {len(results)} suites passed")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _grid_spec(text):
    parts = text.split(",")
    if len(parts) != 5:
        raise argparse.ArgumentTypeError("expected X0,X1,Y0,Y1,RES")
    return [float(parts[0]), float(parts[1]), float(parts[2]),
            float(parts[3]), int(parts[4])]


def _center_spec(text):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected X,Y")
    return (float(parts[0]), float(parts[1]))


def build_parser():
    parser = argparse.ArgumentParser(
        prog="scatterfm",
        description="Far-field operator synthesis and factorization-method "
                    "reconstruction for two-object scatterers.")
    sub = parser.add_subparsers(dest="command", required=True)
    variants = MIXED_VARIANTS + MEDIUM_VARIANTS

    p = sub.add_parser("forward", help="synthesize a far-field operator file")
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--ndirs", type=int, default=64)
    p.add_argument("--nodes", type=int, default=DEFAULT_DATA_NODES,
                   help="Nystroem parameter of the synthesis solver")
    p.add_argument("--cells", type=int, default=64,
                   help="volume grid resolution (medium case)")
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variant", choices=variants)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("reconstruct", help="factorization-method reconstruction")
    p.add_argument("--scene", required=True)
    p.add_argument("--data", required=True, help="measured FFOP v1 file")
    p.add_argument("--out", required=True, help="indicator CSV output")
    p.add_argument("--pgm", help="optional PGM image output")
    p.add_argument("--grid", type=_grid_spec, default=[-6, 6, -6, 6, 80],
                   help="sampling window X0,X1,Y0,Y1,RES")
    p.add_argument("--nodes", type=int, default=DEFAULT_RECON_NODES,
                   help="Nystroem parameter for the artificial operators")
    p.add_argument("--eps-rel", type=float, default=factorization.DEFAULT_EPS_REL,
                   help="relative spectral cutoff of the Picard series")
    p.add_argument("--variant", choices=variants)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("oracle", help="analytic disc far-field table")
    p.add_argument("--condition", required=True,
                   choices=analytic.DISC_CONDITIONS)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--center", type=_center_spec, default=(0.0, 0.0))
    p.add_argument("--ndirs", type=int, default=64)
    p.add_argument("--lambda0", type=float, default=1.0)
    p.add_argument("--q-re", type=float, default=0.5)
    p.add_argument("--q-im", type=float, default=0.0)
    p.add_argument("--out")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("selftest", help="run the built-in invariant suites")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except NormalizationMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (SceneValidationError, SolverError, AssemblyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
