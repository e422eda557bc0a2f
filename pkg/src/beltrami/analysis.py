"""Probes that verify properties of computed solutions: pointwise
distortion, empirical critical integrability exponents, recovery of
pointwise coefficients for the derivative fields, and the inverse-map
(hodograph) identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .autonomous import AutonomousMap
from .grid import DerivedPair, GridField, z_grid
from .operators import d_z, derivative_pair

__all__ = [
    "DEGENERACY_GAP",
    "distortion_field",
    "distortion_stats",
    "DistortionStats",
    "RegularityReport",
    "sobolev_probe",
    "second_order_probe",
    "CoefficientFields",
    "recover_coefficients",
    "GradientCheckResult",
    "gradient_equation_check",
    "HodographResult",
    "hodograph_check",
    "directional_derivative_fields",
    "directional_family_max_distortion",
]

# |f_z| - |f_zbar| at or below this gap counts as orientation-degenerate.
DEGENERACY_GAP = 1e-12


def _distortion_values(fz: np.ndarray, fzb: np.ndarray) -> np.ndarray:
    """Samplewise distortion (|f_z|+|f_zbar|)/(|f_z|-|f_zbar|), inf where
    the orientation degenerates."""
    hi = np.abs(fz) + np.abs(fzb)
    lo = np.abs(fz) - np.abs(fzb)
    out = np.full(fz.shape, np.inf)
    good = lo > DEGENERACY_GAP
    out[good] = hi[good] / lo[good]
    return out


def distortion_field(f: GridField) -> GridField:
    """Pointwise distortion of f as a real-valued field (inf sentinel at
    degenerate samples)."""
    fz, fzb = derivative_pair(f)
    return GridField(f.spec, 0.0, 0.0, _distortion_values(fz.values, fzb.values))


@dataclass(frozen=True)
class DistortionStats:
    max: float
    quantiles: tuple[float, ...]          # 50%, 90%, 99% over nondegenerate samples
    degenerate_fraction: float


def _stats_from_distortion(K: np.ndarray) -> DistortionStats:
    finite = K[np.isfinite(K)]
    frac = 1.0 - finite.size / K.size
    if finite.size == 0:
        return DistortionStats(math.inf, (math.inf,) * 3, 1.0)
    q = tuple(float(v) for v in np.quantile(finite, [0.5, 0.9, 0.99]))
    return DistortionStats(float(finite.max()), q, frac)


def distortion_stats(f: GridField) -> DistortionStats:
    fz, fzb = derivative_pair(f)
    return _stats_from_distortion(_distortion_values(fz.values, fzb.values))


@dataclass
class RegularityReport:
    """Outcome of an integrability probe over a refinement ladder.

    p_critical is the largest probed exponent whose mean |Df|^p stays
    stable under grid doubling (math.inf when every exponent is stable);
    tail_exponent and fit_r2 come from the independent distribution-tail
    fit, used as a cross-check on p_critical.
    """

    p_critical: float
    fit_r2: float
    tail_exponent: float
    distortion_max: float
    distortion_quantiles: tuple[float, ...]
    grid_levels: tuple[int, ...]
    p_grid: tuple[float, ...]
    power_means: tuple[tuple[float, ...], ...]   # [level][p]: mean |Df|^p
    norms: tuple[tuple[float, ...], ...]         # [level][p]: (mean |Df|^p)^(1/p)
    stable: tuple[bool, ...]
    degenerate_fraction: float = 0.0

    def norm_rows(self):
        """(p, level, norm, power_mean, stable) rows for CSV emission."""
        rows = []
        for j, p in enumerate(self.p_grid):
            for i, n in enumerate(self.grid_levels):
                rows.append((p, n, self.norms[i][j], self.power_means[i][j],
                             self.stable[j]))
        return rows


# Growth of the level-to-level increments of mean |Df|^p per doubling above
# this factor marks p unstable (a Cauchy test: shrinking increments mean the
# Riemann sums converge, growing increments mean they diverge).
GROWTH_TOLERANCE = 1.10


def _tail_fit(samples: np.ndarray):
    """Power-law fit of the upper tail of the |Df| distribution.

    Fits log measure{|Df| > lam} against log lam between the 99.5th and
    99.995th percentiles; returns (tail_exponent, r2) with tail_exponent
    = -slope (the empirical critical exponent for power-law tails).
    """
    s = samples[np.isfinite(samples)]
    s = s[s > 0]
    if s.size < 64:
        return math.inf, 0.0
    lo, hi = np.quantile(s, [0.995, 0.99995])
    if not (hi > lo * 1.0001):
        return math.inf, 0.0  # no tail to fit (nearly constant field)
    lam = np.exp(np.linspace(np.log(lo), np.log(hi), 24))
    frac = np.array([(s > l).mean() for l in lam])
    keep = frac > 0
    if keep.sum() < 4:
        return math.inf, 0.0
    x, y = np.log(lam[keep]), np.log(frac[keep])
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return float(-slope), r2


def _as_pair(f: GridField, pair) -> tuple[np.ndarray, np.ndarray]:
    if pair is None:
        fz, fzb = derivative_pair(f)
        return fz.values, fzb.values
    if isinstance(pair, DerivedPair):
        return pair.dz.values, pair.dzbar.values
    a, b = pair
    return a.values, b.values


def sobolev_probe(fields, p_grid, pairs=None) -> RegularityReport:
    """Estimate the critical integrability exponent of the gradient.

    fields: the same solution sampled at >= 3 doubling grid levels.
    pairs: optional per-level derivative pairs; by default the pairs are
    computed spectrally from each field.  For each p the probe tracks the
    Riemann sums mean(|Df|^p) across levels (|Df| = |f_z| + |f_zbar|, the
    maximal directional derivative) and applies a Cauchy test to their
    level-to-level increments: shrinking increments mean convergence,
    increments growing beyond 10% per doubling mean divergence.  For a
    power-law singularity the increment ratio per doubling is
    2^((p - p_critical)/2) on both sides of the critical exponent, so the
    crossing locates it sharply.  p_critical is the largest stable exponent
    below the first unstable one (inf when every probed p is stable).
    """
    fields = list(fields)
    if len(fields) < 3:
        raise ValueError("need at least three refinement levels")
    ns = [f.spec.n for f in fields]
    if any(b != 2 * a for a, b in zip(ns, ns[1:])):
        raise ValueError(f"levels must double the grid: {ns}")
    if len({f.spec.L for f in fields}) != 1:
        raise ValueError("levels must share the physical period")
    p_grid = [float(p) for p in p_grid]
    if any(p < 1 for p in p_grid) or any(b <= a for a, b in zip(p_grid, p_grid[1:])):
        raise ValueError("p_grid must be increasing and >= 1")

    if pairs is None:
        pairs = [None] * len(fields)
    mags = []
    for f, pair in zip(fields, pairs):
        dz, dzb = _as_pair(f, pair)
        mags.append(np.abs(dz) + np.abs(dzb))

    power_means = np.array([[float(np.mean(m ** p)) for p in p_grid] for m in mags])
    norms = power_means ** (1.0 / np.array(p_grid))[None, :]

    stable = []
    for j in range(len(p_grid)):
        col = power_means[:, j]
        scale = float(col.max())
        if scale < 1e-280:
            stable.append(True)  # identically-zero gradient: trivially stable
            continue
        diffs = np.abs(np.diff(col))
        if np.all(diffs <= 1e-12 * scale):
            stable.append(True)  # increments at roundoff: converged
            continue
        ratios = np.maximum(diffs[1:], 1e-300) / np.maximum(diffs[:-1], 1e-300)
        growth = float(np.exp(np.mean(np.log(ratios))))
        stable.append(growth <= GROWTH_TOLERANCE)

    if all(stable):
        p_critical = math.inf
    else:
        first_bad = stable.index(False)
        p_critical = p_grid[first_bad - 1] if first_bad > 0 else p_grid[0]

    tail_exponent, fit_r2 = _tail_fit(mags[-1].reshape(-1))
    K = _distortion_values(*_as_pair(fields[-1], pairs[-1]))
    st = _stats_from_distortion(K)
    return RegularityReport(
        p_critical=p_critical,
        fit_r2=fit_r2,
        tail_exponent=tail_exponent,
        distortion_max=st.max,
        distortion_quantiles=st.quantiles,
        grid_levels=tuple(ns),
        p_grid=tuple(p_grid),
        power_means=tuple(tuple(r) for r in power_means),
        norms=tuple(tuple(r) for r in norms),
        stable=tuple(stable),
        degenerate_fraction=st.degenerate_fraction,
    )


def second_order_probe(fields, k: float, q_grid) -> RegularityReport:
    """Integrability probe for the second derivatives.

    Applies the gradient probe to the z-derivative of each ladder member,
    so the probed pair consists of second derivatives of the solution.
    The interesting comparison level is q against 1 + 1/k.
    """
    if not (0 < k < 1):
        raise ValueError("need a Lipschitz constant in (0, 1)")
    return sobolev_probe([d_z(f) for f in fields], q_grid)


@dataclass(frozen=True)
class CoefficientFields:
    """Pointwise coefficients (mu, nu) for the derivative-field equations.

    flagged marks samples where the 2x2 recovery system was too close to
    singular (both directional gradients conformal, proportional, or zero);
    values there are least-norm placeholders, not measurements.
    """

    mu: GridField
    nu: GridField
    flagged: np.ndarray
    flagged_fraction: float


def recover_coefficients(fx: GridField, fy: GridField, k: float,
                         rel_threshold: float = 1e-6) -> CoefficientFields:
    """Samplewise solve of h_zbar = mu*h_z + nu*conj(h_z) for h in {fx, fy}.

    fx, fy must be the two directional derivative fields of one solution.
    The 2x2 complex system is solved where its smallest singular value is
    at least rel_threshold times the largest (and the largest clears an
    absolute floor, so roundoff-level gradients of constant fields cannot
    masquerade as data); elsewhere the sample is flagged and a least-norm
    value is stored.
    """
    if fx.spec != fy.spec:
        raise ValueError("directional derivative fields live on different grids")
    ax, bx = (g.values for g in derivative_pair(fx))
    ay, by = (g.values for g in derivative_pair(fy))

    det = ax * np.conj(ay) - np.conj(ax) * ay
    fro2 = (np.abs(ax) ** 2 + np.abs(ay) ** 2) * 2.0
    # exact singular values of [[ax, conj(ax)], [ay, conj(ay)]]
    disc = np.sqrt(np.maximum(fro2 ** 2 - 4.0 * np.abs(det) ** 2, 0.0))
    smax = np.sqrt((fro2 + disc) / 2.0)
    smin = np.where(smax > 0, np.abs(det) / np.maximum(smax, 1e-300), 0.0)

    floor = 1e-9 * max(float(smax.max()), 1e-300)
    good = (smin >= rel_threshold * smax) & (smax > floor)

    mu = np.zeros(ax.shape, dtype=complex)
    nu = np.zeros(ax.shape, dtype=complex)
    safe_det = np.where(good, det, 1.0)
    mu = np.where(good, (bx * np.conj(ay) - np.conj(ax) * by) / safe_det, 0.0)
    nu = np.where(good, (ax * by - bx * ay) / safe_det, 0.0)
    # least-norm values on the flagged set (rank <= 1 pseudo-inverse)
    s2 = np.maximum(smax ** 2, 1e-300)
    mu_ln = (np.conj(ax) * bx + np.conj(ay) * by) / s2
    nu_ln = (ax * bx + ay * by) / s2
    mu = np.where(good, mu, mu_ln)
    nu = np.where(good, nu, nu_ln)

    spec = fx.spec
    return CoefficientFields(
        mu=GridField(spec, 0.0, 0.0, mu),
        nu=GridField(spec, 0.0, 0.0, nu),
        flagged=~good,
        flagged_fraction=float(np.mean(~good)),
    )


@dataclass(frozen=True)
class GradientCheckResult:
    residual: float        # relative l2 residual on the well-conditioned set
    k_prime: float         # max |mu| / (1 - |nu|) on that set
    used_fraction: float


def gradient_equation_check(f: GridField, coeffs: CoefficientFields) -> GradientCheckResult:
    """Check that f_z satisfies the derived equation with the recovered
    coefficients:

        (f_z)_zbar = [mu/(1-|nu|^2)] (f_z)_z + [conj(mu) nu/(1-|nu|^2)] conj((f_z)_z)

    restricted to the well-conditioned samples.  Also reports
    k' = max |mu|/(1-|nu|) there (0.0 when every sample is flagged).
    """
    if f.spec != coeffs.mu.spec:
        raise ValueError("field and coefficients live on different grids")
    fz = d_z(f)
    fzz, fzzb = (g.values for g in derivative_pair(fz))
    good = ~coeffs.flagged
    if not np.any(good):
        return GradientCheckResult(0.0, 0.0, 0.0)
    mu = coeffs.mu.values[good]
    nu = coeffs.nu.values[good]
    denom = 1.0 - np.abs(nu) ** 2
    lhs = fzzb[good]
    rhs = mu / denom * fzz[good] + np.conj(mu) * nu / denom * np.conj(fzz[good])
    num = float(np.sqrt(np.mean(np.abs(lhs - rhs) ** 2)))
    den = float(np.sqrt(np.mean(np.abs(lhs) ** 2)))
    residual = 0.0 if den < 1e-280 and num < 1e-280 else num / max(den, 1e-300)
    k_prime = float(np.max(np.abs(mu) / np.maximum(1.0 - np.abs(nu), 1e-300)))
    return GradientCheckResult(residual, k_prime, float(np.mean(good)))


def directional_derivative_fields(f: GridField) -> tuple[GridField, GridField]:
    """The x- and y-directional derivatives of f as purely periodic fields."""
    fz, fzb = derivative_pair(f)
    fx = GridField(f.spec, 0.0, 0.0, fz.values + fzb.values)
    fy = GridField(f.spec, 0.0, 0.0, 1j * (fz.values - fzb.values))
    return fx, fy


def directional_family_max_distortion(f: GridField, n_directions: int = 16,
                                      gradient_floor: float = 1e-8) -> float:
    """Max samplewise distortion over cos(t)*fx + sin(t)*fy directions.

    Samples wherever the member's gradient magnitude exceeds the floor;
    returns 0.0 when every member is constant below the floor (the
    constant branch of the dichotomy).  Degenerate samples surface as inf.
    """
    fx, fy = directional_derivative_fields(f)
    ax, bx = (g.values for g in derivative_pair(fx))
    ay, by = (g.values for g in derivative_pair(fy))
    worst = 0.0
    for t in np.linspace(0.0, np.pi, n_directions, endpoint=False):
        ca, sa = math.cos(t), math.sin(t)
        vz = ca * ax + sa * ay
        vzb = ca * bx + sa * by
        mag = np.abs(vz) + np.abs(vzb)
        active = mag > gradient_floor
        if not np.any(active):
            continue
        K = _distortion_values(vz, vzb)[active]
        worst = max(worst, float(K.max()))
    return worst


@dataclass(frozen=True)
class HodographResult:
    max_identity_residual: float
    max_derivative_ratio: float   # max |h_wbar| / |h_w| over accepted points
    accepted: int
    skipped: int


def _bilinear(values: np.ndarray, spec, x: float, y: float) -> complex:
    """Periodic bilinear interpolation of grid samples."""
    n, h = spec.n, spec.h
    fx, fy = x / h, y / h
    j0, i0 = int(np.floor(fx)), int(np.floor(fy))
    tx, ty = fx - j0, fy - i0
    j0 %= n
    i0 %= n
    j1, i1 = (j0 + 1) % n, (i0 + 1) % n
    return ((1 - tx) * (1 - ty) * values[i0, j0] + tx * (1 - ty) * values[i0, j1]
            + (1 - tx) * ty * values[i1, j0] + tx * ty * values[i1, j1])


def hodograph_check(
    f: GridField,
    A: AutonomousMap,
    sample_points: int,
    seed: int = 0,
    min_jacobian: float = 0.1,
    fd_step: float | None = None,
) -> HodographResult:
    """Probe the equation satisfied by the local inverse h of f.

    Near randomly chosen grid points the inverse is computed by damped
    fixed-point refinement on the bilinear interpolant (target 1e-12, 50
    steps), its derivatives h_w, h_wbar and Jacobian J = |h_w|^2 - |h_wbar|^2
    are estimated by centered differences, and the identity

        h_wbar = -J * A( conj(h_w) / J )

    is evaluated (the sign and conjugation follow from the 2x2 inverse
    Jacobian; they are forced by the closed-form affine case).  Points
    whose forward Jacobian falls below min_jacobian are skipped and
    counted.  Also reports max |h_wbar|/|h_w|, which the gradient bound
    |A(zeta)| <= k|zeta| caps at k.
    """
    if sample_points < 1:
        raise ValueError("need at least one sample point")
    spec = f.spec
    rng = np.random.default_rng(seed)
    Z = z_grid(spec)
    fz, fzb = (g.values for g in derivative_pair(f))
    J_f = np.abs(fz) ** 2 - np.abs(fzb) ** 2
    W = f.total_values()

    delta = fd_step if fd_step is not None else 0.5 * spec.h

    def f_at(z: complex) -> complex:
        return (f.c * z + f.d * np.conjugate(z)
                + _bilinear(f.values, spec, z.real, z.imag))

    def invert(w: complex, z0: complex, dfz: complex, dfzb: complex,
               jac: float) -> complex | None:
        z = z0
        for _ in range(50):
            err = w - f_at(z)
            if abs(err) <= 1e-12:
                return z
            step = (np.conjugate(dfz) * err - dfzb * np.conjugate(err)) / jac
            z = z + 0.8 * step
        return z if abs(w - f_at(z)) <= 1e-9 else None

    n = spec.n
    idx = rng.integers(0, n, size=(sample_points, 2))
    worst_identity = 0.0
    worst_ratio = 0.0
    accepted = skipped = 0
    for i, j in idx:
        if J_f[i, j] <= min_jacobian:
            skipped += 1
            continue
        z0 = complex(Z[i, j])
        w0 = complex(W[i, j])
        dfz, dfzb, jac = complex(fz[i, j]), complex(fzb[i, j]), float(J_f[i, j])
        probes = []
        failed = False
        for dw in (delta, -delta, 1j * delta, -1j * delta):
            zz = invert(w0 + dw, z0, dfz, dfzb, jac)
            if zz is None:
                failed = True
                break
            probes.append(zz)
        if failed:
            skipped += 1
            continue
        hx = (probes[0] - probes[1]) / (2 * delta)
        hy = (probes[2] - probes[3]) / (2 * delta)
        h_w = (hx - 1j * hy) / 2
        h_wb = (hx + 1j * hy) / 2
        J_h = abs(h_w) ** 2 - abs(h_wb) ** 2
        if J_h <= 0:
            skipped += 1
            continue
        lhs = h_wb
        rhs = -J_h * complex(A.eval(np.array([np.conjugate(h_w) / J_h]))[0])
        worst_identity = max(worst_identity, abs(lhs - rhs) / max(abs(h_w), 1e-300))
        worst_ratio = max(worst_ratio, abs(h_wb) / max(abs(h_w), 1e-300))
        accepted += 1
    return HodographResult(worst_identity, worst_ratio, accepted, skipped)
