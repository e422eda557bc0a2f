"""Periodic complex fields on a square torus with an explicit affine part.

A field is represented as

    f(z) = c*z + d*conj(z) + P(z)

where P is doubly periodic with period L in both coordinates and is stored
as point samples on the n-by-n lattice z = (j + i*k) * L/n (column j gives
the x coordinate, row k the y coordinate, sample (0, 0) at z = 0).  The
affine part carries the prescribed derivative means: the z-derivative of f
has mean c, the conj(z)-derivative has mean d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GridSpec",
    "GridField",
    "DerivedPair",
    "make_field",
    "zero_field",
    "constant_field",
    "lp_norm",
    "z_grid",
    "read_field",
    "write_field",
]

# Full-precision decimal format used by the BFLD1 file layer; 17 significant
# digits round-trips any float64 exactly.
_FMT = "%.17g"


@dataclass(frozen=True)
class GridSpec:
    """Square torus lattice: n samples per axis, physical period L."""

    n: int
    L: float = 2.0 * math.pi

    def __post_init__(self):
        if self.n < 16 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"grid size must be a power of two >= 16, got {self.n}")
        if not (self.L > 0):
            raise ValueError(f"period must be positive, got {self.L}")

    @property
    def h(self) -> float:
        """Lattice spacing L/n."""
        return self.L / self.n


def z_grid(spec: GridSpec) -> np.ndarray:
    """Complex sample locations, shape (n, n); [k, j] = (j + i*k) * L/n."""
    t = np.arange(spec.n) * spec.h
    x, y = np.meshgrid(t, t)
    return x + 1j * y


@dataclass(frozen=True)
class GridField:
    """Immutable field c*z + d*conj(z) + P on a GridSpec lattice."""

    spec: GridSpec
    c: complex
    d: complex
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.size != self.spec.n * self.spec.n:
            raise ValueError(
                f"sample-count mismatch: expected {self.spec.n ** 2}, got {v.size}"
            )
        v = v.reshape(self.spec.n, self.spec.n).copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "c", complex(self.c))
        object.__setattr__(self, "d", complex(self.d))

    @property
    def periodic_mean(self) -> complex:
        return complex(self.values.mean())

    def total_values(self) -> np.ndarray:
        """Samples of the full field (affine part included) on one cell."""
        z = z_grid(self.spec)
        return self.c * z + self.d * np.conj(z) + self.values

    def is_periodic(self, tol: float = 0.0) -> bool:
        return abs(self.c) <= tol and abs(self.d) <= tol

    # Pointwise arithmetic; the affine coefficients combine linearly.
    def __add__(self, other: "GridField") -> "GridField":
        self._check_same_spec(other)
        return GridField(self.spec, self.c + other.c, self.d + other.d,
                         self.values + other.values)

    def __sub__(self, other: "GridField") -> "GridField":
        self._check_same_spec(other)
        return GridField(self.spec, self.c - other.c, self.d - other.d,
                         self.values - other.values)

    def __mul__(self, s: complex) -> "GridField":
        return GridField(self.spec, s * self.c, s * self.d, s * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> "GridField":
        return self * (-1.0)

    def _check_same_spec(self, other: "GridField") -> None:
        if self.spec != other.spec:
            raise ValueError(f"grid spec mismatch: {self.spec} vs {other.spec}")


@dataclass(frozen=True)
class DerivedPair:
    """The derivative pair (df/dz, df/dconj(z)) of one field.

    Both members share the source field's GridSpec; mean(dz) equals the
    source's c and mean(dzbar) equals the source's d.  Iterable, so
    ``dz, dzbar = pair`` unpacks.
    """

    dz: GridField
    dzbar: GridField

    def __post_init__(self):
        if self.dz.spec != self.dzbar.spec:
            raise ValueError("derivative pair members live on different grids")

    def __iter__(self):
        return iter((self.dz, self.dzbar))


def make_field(spec: GridSpec, c: complex, d: complex,
               periodic_samples: np.ndarray) -> GridField:
    """Build a field from its affine coefficients and periodic samples.

    The periodic mean is kept as given (it is not folded into the affine
    part).  Raises on a sample-count mismatch or an invalid grid size.
    """
    return GridField(spec, c, d, np.asarray(periodic_samples, dtype=complex))


def zero_field(spec: GridSpec) -> GridField:
    return GridField(spec, 0.0, 0.0, np.zeros((spec.n, spec.n), dtype=complex))


def constant_field(spec: GridSpec, value: complex) -> GridField:
    return GridField(spec, 0.0, 0.0,
                     np.full((spec.n, spec.n), complex(value), dtype=complex))


def lp_norm(f: GridField, p: float, periodic_only: bool = False) -> float:
    """Riemann-sum L^p norm over one period, normalized by the cell area.

    Computes (mean of |f|^p over the lattice)^(1/p), which approximates
    ( (1/L^2) * integral |f|^p )^(1/p).  With periodic_only the affine part
    is excluded and only P enters.
    """
    if not (p >= 1):
        raise ValueError(f"p must be >= 1, got {p}")
    v = f.values if periodic_only else f.total_values()
    return float(np.mean(np.abs(v) ** p) ** (1.0 / p))


def values_l2(values: np.ndarray) -> float:
    """Cell-averaged l2 norm of raw samples: sqrt(mean |v|^2)."""
    return float(np.sqrt(np.mean(np.abs(values) ** 2)))


def write_field(f: GridField, path) -> None:
    """Write a field in the BFLD1 text format.

    Line 1: ``BFLD1 <n> <n> <L> <c_re> <c_im> <d_re> <d_im>``; then n^2
    lines ``<re> <im>`` in row-major order, 17 significant digits.
    """
    n = f.spec.n
    head = " ".join(
        ["BFLD1", str(n), str(n)]
        + [_FMT % x for x in (f.spec.L, f.c.real, f.c.imag, f.d.real, f.d.imag)]
    )
    flat = f.values.reshape(-1)
    lines = [head]
    lines.extend(_FMT % v.real + " " + _FMT % v.imag for v in flat)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_field(path) -> GridField:
    """Read a BFLD1 file; inverse of write_field on the stored decimals."""
    with open(path) as fh:
        head = fh.readline().split()
        if len(head) != 8 or head[0] != "BFLD1":
            raise ValueError(f"malformed header in {path!r}")
        try:
            n1, n2 = int(head[1]), int(head[2])
            L, cre, cim, dre, dim = (float(x) for x in head[3:])
        except ValueError as exc:
            raise ValueError(f"malformed header in {path!r}: {exc}") from None
        if n1 != n2:
            raise ValueError(f"malformed header in {path!r}: grid must be square")
        spec = GridSpec(n1, L)
        vals = np.empty(n1 * n1, dtype=complex)
        count = 0
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if count >= n1 * n1:
                raise ValueError(f"sample-count mismatch in {path!r}: too many rows")
            re_s, im_s = line.split()
            vals[count] = complex(float(re_s), float(im_s))
            count += 1
        if count != n1 * n1:
            raise ValueError(
                f"sample-count mismatch in {path!r}: expected {n1 * n1} rows, got {count}"
            )
        if not np.all(np.isfinite(vals.view(float))):
            raise ValueError(f"non-finite values in {path!r}")
        return GridField(spec, complex(cre, cim), complex(dre, dim), vals)
