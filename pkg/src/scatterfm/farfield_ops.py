"""Discrete far-field operators on a direction grid, and their modification.

A FarFieldMatrix samples u_inf(x_hat_i, theta_j) on the uniform grid of N
directions; the quadrature weight 2 pi / N turns it into the discrete far
field operator. The paper-style modification consists of adding, entrywise,
artificial far-field operators of known a-priori domains (pure Dirichlet or
pure impedance scattering problems); the variant table below says which
parts each theorem variant needs. Sums never re-solve anything: they are
plain matrix additions with provenance concatenated.
"""

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .forward_bie import BoundarySpec, solve_exterior

NORMALIZATION = "gamma2"

#: artificial parts required by each theorem variant, in summation order
VARIANT_PARTS = {
    "T1.2": ("dir(b2)", "imp(b1+b3)"),
    "T1.4": ("dir(b2)", "imp(b3)"),
    "T3.6": ("dir(b1+b2)",),
    "T4.6": ("imp(b2)",),
    "baseline-liu": ("dir(b2)",),
    "baseline-kirschliu": ("dir(b2)",),
}

ARTIFICIAL_KINDS = ("dir(b2)", "dir(b1+b2)", "imp(b1+b3)", "imp(b3)", "imp(b2)")


class NormalizationMismatchError(ValueError):
    """Operands of an operator sum disagree in grid, wavenumber or tag."""


class MissingDomainError(ValueError):
    """Scene lacks an a-priori domain required by the requested operator."""


class FileFormatError(ValueError):
    """Malformed far-field operator file."""


@dataclass(frozen=True)
class DirectionGrid:
    """Uniform grid of N directions on the unit circle, weights 2 pi / N."""

    n: int

    def __post_init__(self):
        if self.n < 16 or self.n % 2:
            raise ValueError(f"direction count must be even and >= 16, got {self.n}")

    @property
    def angles(self):
        return 2.0 * np.pi * np.arange(self.n) / self.n

    @property
    def directions(self):
        a = self.angles
        return np.stack([np.cos(a), np.sin(a)], axis=1)

    @property
    def weight(self):
        return 2.0 * np.pi / self.n


@dataclass(frozen=True)
class FarFieldMatrix:
    """N x N far-field samples with wavenumber and normalization metadata."""

    grid: DirectionGrid
    k: float
    entries: np.ndarray
    provenance: tuple
    normalization: str = NORMALIZATION
    noise: float = None
    seed: int = None

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=complex)
        if e.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"entries must be {self.grid.n} x {self.grid.n}, "
                             f"got {e.shape}")
        if not np.all(np.isfinite(e.view(float))):
            raise ValueError("far-field entries contain non-finite values")
        object.__setattr__(self, "entries", e)
        object.__setattr__(self, "provenance", tuple(self.provenance))


def _compatible(a, b):
    if a.grid.n != b.grid.n:
        raise NormalizationMismatchError(
            f"direction grids differ: {a.grid.n} vs {b.grid.n}")
    if not math.isclose(a.k, b.k, rel_tol=1e-12, abs_tol=0.0):
        raise NormalizationMismatchError(f"wavenumbers differ: {a.k} vs {b.k}")
    if a.normalization != b.normalization:
        raise NormalizationMismatchError(
            f"normalization tags differ: {a.normalization} vs {b.normalization}")


def _mixed_boundaries(scene):
    return [BoundarySpec(scene.omega1, "dirichlet"),
            BoundarySpec(scene.omega2, "neumann")]


def assemble_far_field_operator(scene, grid, n, medium_cells=64):
    """Synthesize the measured far-field operator of a scene.

    n is the per-curve Nystroem parameter of the boundary solver;
    medium_cells the volume grid resolution in the medium case. Column j
    holds the far field for incident direction theta_j at all x_hat_i.
    """
    dirs = grid.directions
    if scene.case == "mixed":
        sol = solve_exterior(_mixed_boundaries(scene), scene.k, n, directions=dirs)
        entries = sol.far_field(dirs)
        prov = ("mix(omega1:dirichlet,omega2:neumann)",)
    else:
        from .forward_medium import solve_medium_obstacle
        sol = solve_medium_obstacle(scene.contrast, scene.omega2, scene.k,
                                    dirs, m=medium_cells, n=n)
        entries = sol.far_field(dirs)
        prov = ("medium(omega1:q,omega2:dirichlet)",)
    return FarFieldMatrix(grid=grid, k=scene.k, entries=entries, provenance=prov)


def _artificial_boundaries(kind, scene):
    def need(name):
        curve = getattr(scene, name)
        if curve is None:
            raise MissingDomainError(f"missing-domain: {kind} requires {name}")
        return curve

    lam = scene.lambda0
    if kind == "dir(b2)":
        return [BoundarySpec(need("b2"), "dirichlet")]
    if kind == "dir(b1+b2)":
        return [BoundarySpec(need("b1"), "dirichlet"),
                BoundarySpec(need("b2"), "dirichlet")]
    if kind == "imp(b1+b3)":
        return [BoundarySpec(need("b1"), "impedance", lam),
                BoundarySpec(need("b3"), "impedance", lam)]
    if kind == "imp(b3)":
        return [BoundarySpec(need("b3"), "impedance", lam)]
    if kind == "imp(b2)":
        return [BoundarySpec(need("b2"), "impedance", lam)]
    raise ValueError(f"unknown artificial operator kind {kind!r}")


def artificial_operator(kind, scene, grid, n):
    """Far-field operator of an auxiliary pure-boundary-condition problem.

    Computed on the listed a-priori domains only (independent of the actual
    scatterer), noise-free, on the same grid and normalization as the
    measured operator.
    """
    dirs = grid.directions
    sol = solve_exterior(_artificial_boundaries(kind, scene), scene.k, n,
                         directions=dirs)
    return FarFieldMatrix(grid=grid, k=scene.k, entries=sol.far_field(dirs),
                          provenance=(kind,))


def modify_operator(variant, measured, parts):
    """Entrywise sum of the measured operator and its artificial parts.

    parts maps artificial kind -> FarFieldMatrix and must contain exactly
    the kinds the variant requires. No solve happens here.
    """
    try:
        wanted = VARIANT_PARTS[variant]
    except KeyError:
        raise ValueError(f"unknown variant {variant!r}") from None
    if set(parts) != set(wanted):
        raise ValueError(f"variant {variant} needs parts {sorted(wanted)}, "
                         f"got {sorted(parts)}")
    entries = measured.entries.copy()
    prov = list(measured.provenance)
    for kind in wanted:
        p = parts[kind]
        _compatible(measured, p)
        entries += p.entries
        prov.extend(p.provenance)
    return FarFieldMatrix(grid=measured.grid, k=measured.k, entries=entries,
                          provenance=tuple(prov), noise=measured.noise,
                          seed=measured.seed)


def add_noise(ffm, delta, seed):
    """Additive complex Gaussian noise at exact relative Frobenius level delta."""
    if not 0.0 <= delta <= 0.2:
        raise ValueError(f"noise level must be in [0, 0.2], got {delta}")
    if delta == 0.0:
        return ffm
    rng = np.random.default_rng(seed)
    shape = ffm.entries.shape
    e = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    scale = delta * np.linalg.norm(ffm.entries) / np.linalg.norm(e)
    return replace(ffm, entries=ffm.entries + scale * e,
                   noise=float(delta), seed=int(seed))


# ---------------------------------------------------------------------------
# FFOP v1 file format
# ---------------------------------------------------------------------------

_HEADER = "FFOP v1"
_META_KEYS = {"n", "k", "normalization", "provenance", "seed", "noise"}


def write_far_field(ffm, path):
    """Write a FarFieldMatrix as an FFOP v1 text file (lossless)."""
    meta = {"n": ffm.grid.n, "k": ffm.k, "normalization": ffm.normalization,
            "provenance": list(ffm.provenance)}
    if ffm.noise is not None:
        meta["noise"] = ffm.noise
    if ffm.seed is not None:
        meta["seed"] = ffm.seed
    lines = [_HEADER, json.dumps(meta)]
    for v in ffm.entries.ravel():
        lines.append(f"{v.real:.17e} {v.imag:.17e}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_far_field(path):
    """Read an FFOP v1 file back into a FarFieldMatrix."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FileFormatError("line 1: empty file")
    if lines[0] != _HEADER:
        if lines[0].startswith("FFOP"):
            raise FileFormatError(f"line 1: unsupported version {lines[0]!r}")
        raise FileFormatError(f"line 1: expected {_HEADER!r}, got {lines[0]!r}")
    if len(lines) < 2:
        raise FileFormatError("line 2: missing metadata")
    try:
        meta = json.loads(lines[1])
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"line 2: invalid JSON ({exc})") from None
    if not isinstance(meta, dict):
        raise FileFormatError("line 2: metadata must be a JSON object")
    unknown = set(meta) - _META_KEYS
    if unknown:
        raise FileFormatError(f"line 2: unknown keys {sorted(unknown)}")
    for key in ("n", "k", "normalization", "provenance"):
        if key not in meta:
            raise FileFormatError(f"line 2: missing key {key!r}")
    n = int(meta["n"])
    expected = n * n
    data_lines = lines[2:]
    if len(data_lines) != expected:
        raise FileFormatError(
            f"line {len(lines) + 1}: expected {expected} entry lines, "
            f"got {len(data_lines)}")
    entries = np.empty(expected, dtype=complex)
    for i, line in enumerate(data_lines):
        parts = line.split()
        if len(parts) != 2:
            raise FileFormatError(f"line {i + 3}: expected 're im', got {line!r}")
        try:
            entries[i] = complex(float(parts[0]), float(parts[1]))
        except ValueError:
            raise FileFormatError(f"line {i + 3}: unparseable floats") from None
    return FarFieldMatrix(grid=DirectionGrid(n), k=float(meta["k"]),
                          entries=entries.reshape(n, n),
                          provenance=tuple(meta["provenance"]),
                          normalization=str(meta["normalization"]),
                          noise=meta.get("noise"), seed=meta.get("seed"))
