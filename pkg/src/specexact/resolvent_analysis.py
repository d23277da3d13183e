"""Resolvent norms, pseudospectra grids, region-of-boundedness probes, contour ranks.

Verdicts produced here are *evidence*, never proofs: the region of
boundedness is an asymptotic notion and a finite ladder can only exhibit
trends.  The thresholds that define the evidence standard are keyword
arguments with the documented defaults.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from . import numerics, operator_model
from .errors import ContourError, ResolutionError
from .operator_model import section_array

#: contour-projection singular values are split at this threshold ...
RANK_THRESHOLD = 0.5
#: ... and the kept/dropped ratio must be at least this factor
GAP_FACTOR = 10.0
#: default number of trapezoid points on a circle
DEFAULT_QUADRATURE = 64

_PRECONDITION_RESNORM = 1e8  # scaled by 1/radius in contour_rank


class ProbeVerdict(str, enum.Enum):
    BOUNDED = "BoundedEvidence"
    UNBOUNDED = "UnboundedEvidence"
    INCONCLUSIVE = "Inconclusive"


@dataclass(eq=False)
class SectionLadder:
    """A truncation family: strictly increasing sizes plus a section provider.

    Sections and their spectra are cached per size; providers must be pure.
    """

    label: str
    sizes: tuple
    provider: Callable = field(repr=False)
    _sections: dict = field(default_factory=dict, repr=False)
    _spectra: dict = field(default_factory=dict, repr=False)
    _norms: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.sizes = tuple(self.sizes)
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise ValueError("ladder sizes must be strictly increasing")

    def matrix(self, size) -> np.ndarray:
        if size not in self._sections:
            self._sections[size] = numerics.as_matrix(
                section_array(self.provider(size)), square=True
            )
        return self._sections[size]

    def spectrum(self, size) -> numerics.EigenDecomposition:
        if size not in self._spectra:
            self._spectra[size] = numerics.eig_dense(self.matrix(size))
        return self._spectra[size]

    def norm(self, size) -> float:
        if size not in self._norms:
            self._norms[size] = numerics.op_norm(self.matrix(size))
        return self._norms[size]

    def conjugated(self) -> "SectionLadder":
        """Ladder of conjugate transposes (the discrete adjoint family)."""
        return SectionLadder(
            label=f"{self.label}*",
            sizes=self.sizes,
            provider=lambda s: self.matrix(s).conj().T,
        )


def galerkin_ladder(spec, sizes) -> SectionLadder:
    """Ladder of leading principal sections of an operator spec."""
    return SectionLadder(
        label=spec.name, sizes=tuple(sizes), provider=lambda k: operator_model.truncate(spec, k)
    )


def resolvent_norm(m, z: complex) -> float:
    """1 / sigma_min(M - z I); inf exactly when sigma_min is exactly zero."""
    a = numerics.as_matrix(section_array(m), square=True)
    zc = complex(z)
    if zc.imag == 0.0 and not np.iscomplexobj(a):
        shifted = a - zc.real * np.eye(a.shape[0])
    else:
        shifted = a - zc * np.eye(a.shape[0])
    s = numerics.sigma_min(shifted)
    return float("inf") if s == 0.0 else 1.0 / s


# --------------------------------- pseudospectra --------------------------------


@dataclass
class PseudoGrid:
    """Resolvent norms over a uniform rectangle lattice.

    ``values[iy, ix]`` is 1/sigma_min(M - z) at z = re_points[ix] + 1j * im_points[iy];
    infinite values mark exactly singular shifts.  CSV layout is row-major over
    the lattice: iy outer, ix inner.
    """

    rect: tuple[float, float, float, float]
    nx: int
    ny: int
    size: int
    values: np.ndarray

    @property
    def re_points(self) -> np.ndarray:
        return np.linspace(self.rect[0], self.rect[1], self.nx)

    @property
    def im_points(self) -> np.ndarray:
        return np.linspace(self.rect[2], self.rect[3], self.ny)

    def rows(self):
        res = self.re_points
        ims = self.im_points
        for iy in range(self.ny):
            for ix in range(self.nx):
                yield res[ix], ims[iy], self.values[iy, ix]

    def write_csv(self, fh) -> None:
        fh.write("re,im,resnorm\n")
        for re, im, val in self.rows():
            sval = "inf" if np.isinf(val) else f"{val:.17g}"
            fh.write(f"{re:.17g},{im:.17g},{sval}\n")


def pseudospectrum_grid(m, rect, nx: int, ny: int, threads: int = 1) -> PseudoGrid:
    """Evaluate the resolvent norm on an nx-by-ny lattice over ``rect``.

    ``threads`` only parallelizes independent lattice rows; values are
    bitwise independent of the schedule.
    """
    a = numerics.as_matrix(section_array(m), square=True)
    re0, re1, im0, im1 = (float(v) for v in rect)
    if not (re1 > re0 and im1 > im0):
        raise ValueError("rectangle must be nondegenerate")
    if nx < 2 or ny < 2:
        raise ValueError("resolution must be at least 2x2")
    res = np.linspace(re0, re1, nx)
    ims = np.linspace(im0, im1, ny)
    values = np.empty((ny, nx), dtype=float)
    eye = np.eye(a.shape[0])

    def fill_row(iy: int) -> None:
        for ix in range(nx):
            z = complex(res[ix], ims[iy])
            s = numerics.sigma_min(a - z * eye)
            values[iy, ix] = np.inf if s == 0.0 else 1.0 / s

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            list(pool.map(fill_row, range(ny)))
    else:
        for iy in range(ny):
            fill_row(iy)
    return PseudoGrid(rect=(re0, re1, im0, im1), nx=nx, ny=ny, size=a.shape[0], values=values)


# -------------------------------- region probing --------------------------------


@dataclass
class RegionProbe:
    """sigma_min(M_n - z) along a truncation ladder plus a trend verdict."""

    point: complex
    sizes: tuple
    values: np.ndarray
    verdict: ProbeVerdict
    head_geomean: float
    tail_geomean: float
    tail_min: float
    scale: float

    def to_dict(self) -> dict:
        return {
            "point": [self.point.real, self.point.imag],
            "sizes": list(self.sizes),
            "values": [float(v) for v in self.values],
            "verdict": self.verdict.value,
            "head_geomean": self.head_geomean,
            "tail_geomean": self.tail_geomean,
            "tail_min": self.tail_min,
            "scale": self.scale,
        }


def _geomean(values: np.ndarray) -> float:
    if np.any(values == 0.0):
        return 0.0
    return float(np.exp(np.mean(np.log(values))))


def region_probe(
    ladder: SectionLadder,
    z: complex,
    *,
    zero_floor: float = 1e-10,
    bounded_floor: float = 1e-6,
    decay_ratio: float = 0.5,
    final_drop: float = 0.1,
) -> RegionProbe:
    """Probe whether z behaves like a point of the region of boundedness.

    UnboundedEvidence: the final sigma_min falls below ``zero_floor * scale``,
    or the last-third geometric mean is below ``decay_ratio`` times the
    first-third one with the final value below ``final_drop`` times the first.
    BoundedEvidence: the ladder minimum stays above ``bounded_floor * scale``
    and final/initial stays at least ``decay_ratio``.  Anything else is
    Inconclusive.  ``scale`` is the spectral norm of the largest section.
    """
    if len(ladder.sizes) < 6:
        raise ValueError("region probe needs a ladder of at least 6 sizes")
    zc = complex(z)
    values = []
    for size in ladder.sizes:
        a = ladder.matrix(size)
        if zc.imag == 0.0 and not np.iscomplexobj(a):
            shifted = a - zc.real * np.eye(a.shape[0])
        else:
            shifted = a - zc * np.eye(a.shape[0])
        values.append(numerics.sigma_min(shifted))
    values = np.asarray(values)
    scale = ladder.norm(ladder.sizes[-1])
    third = max(1, len(values) // 3)
    head = _geomean(values[:third])
    tail = _geomean(values[-third:])
    final, first = values[-1], values[0]

    if final < zero_floor * scale or (tail < decay_ratio * head and final < final_drop * first):
        verdict = ProbeVerdict.UNBOUNDED
    elif values.min() >= bounded_floor * scale and final >= decay_ratio * first:
        verdict = ProbeVerdict.BOUNDED
    else:
        verdict = ProbeVerdict.INCONCLUSIVE
    return RegionProbe(
        point=zc,
        sizes=ladder.sizes,
        values=values,
        verdict=verdict,
        head_geomean=head,
        tail_geomean=tail,
        tail_min=float(values[-third:].min()),
        scale=scale,
    )


# ------------------------------- contour projections -----------------------------


class _Factorization:
    """LU of one matrix (dense or LAPACK band storage) with optional-adjoint solves."""

    def __init__(self, n: int, kl: int = 0, ku: int = 0, ab=None, dense=None):
        self.n = n
        self.banded = ab is not None
        if self.banded:
            self.kl, self.ku = kl, ku
            gbtrf = lapack.get_lapack_funcs("gbtrf", (ab,))
            lu, ipiv, info = gbtrf(ab, kl, ku)
            if info != 0:
                raise scipy.linalg.LinAlgError(f"banded LU failed with info={info}")
            self._lu, self._ipiv = lu, ipiv
            self._gbtrs = lapack.get_lapack_funcs("gbtrs", (lu,))
        else:
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
                self._lu, self._piv = scipy.linalg.lu_factor(dense, check_finite=False)
            if np.abs(np.diag(self._lu)).min() == 0.0:
                raise scipy.linalg.LinAlgError("exact zero pivot")

    def solve(self, b: np.ndarray, adjoint: bool = False) -> np.ndarray:
        if self.banded:
            x, info = self._gbtrs(
                self._lu, self.kl, self.ku, b, self._ipiv, trans=2 if adjoint else 0
            )
            if info != 0:
                raise scipy.linalg.LinAlgError(f"banded solve failed with info={info}")
            return x
        return scipy.linalg.lu_solve(
            (self._lu, self._piv), b, trans=2 if adjoint else 0, check_finite=False
        )

    def inverse_norm_estimate(self, iterations: int = 8) -> float:
        """Power-iteration lower estimate of ||A^{-1}||_2 (converging from below)."""
        x = np.ones(self.n, dtype=complex) / np.sqrt(self.n)
        est = 0.0
        for _ in range(iterations):
            y = self.solve(x)
            w = self.solve(y, adjoint=True)
            norm = np.linalg.norm(w)
            if not np.isfinite(norm) or norm == 0.0:
                return np.inf if not np.isfinite(norm) else 0.0
            # Rayleigh quotient of (A^-1 A^-H) at x equals <w, x>
            est = np.sqrt(abs(np.vdot(w, x)))
            x = w / norm
        return float(est)


class _ShiftFamily:
    """Factorizer for z I - A over many shifts z, reusing A's band structure."""

    def __init__(self, a: np.ndarray):
        n = a.shape[0]
        nz_r, nz_c = np.nonzero(a)
        if nz_r.size:
            offs = nz_c - nz_r
            kl, ku = int(max(0, -offs.min())), int(max(0, offs.max()))
        else:
            kl = ku = 0
        self.n, self.kl, self.ku = n, kl, ku
        # banded storage only pays off when the band is genuinely narrow
        self.banded = n >= 64 and (kl + ku + 1) <= max(4, n // 8)
        if self.banded:
            # band template of -A in gbtrf layout: entry (i, j) at row kl+ku+i-j
            ab0 = np.zeros((2 * kl + ku + 1, n), dtype=complex)
            for off in range(-kl, ku + 1):
                d = np.diag(a, off)
                if off >= 0:
                    ab0[kl + ku - off, off : off + d.shape[0]] = -d
                else:
                    ab0[kl + ku - off, : d.shape[0]] = -d
            self._ab0 = ab0
        else:
            self._dense = a.astype(complex, copy=False)

    def factor(self, z: complex) -> _Factorization:
        if self.banded:
            ab = self._ab0.copy()
            ab[self.kl + self.ku, :] += z
            return _Factorization(self.n, self.kl, self.ku, ab=ab)
        return _Factorization(self.n, dense=z * np.eye(self.n) - self._dense)


def _projection_singular_values(proj: np.ndarray) -> np.ndarray:
    """Singular values of the projection via its Gram matrix.

    Absolute accuracy ~ sqrt(eps) * sigma_max, plenty for the 0.5-threshold
    rank split; much cheaper than a full SVD at the sizes contours see.
    """
    gram = proj.conj().T @ proj
    w = np.linalg.eigvalsh(gram)
    return np.sqrt(np.maximum(w[::-1], 0.0))


@dataclass
class ContourRank:
    """Trapezoid contour projection with its extracted rank."""

    center: complex
    radius: float
    quadrature_points: int
    projection: np.ndarray = field(repr=False)
    rank: int
    gap: float
    singular_values: np.ndarray = field(repr=False)


def contour_rank(m, center: complex, radius: float, quadrature_points: int = DEFAULT_QUADRATURE) -> ContourRank:
    """Rank of the spectral projection for the circle of given center/radius.

    The projection (1/2 pi i) * contour integral of the resolvent is formed by
    the trapezoid rule; its singular values cluster near 1 and 0 and the rank
    is the count above 0.5, accepted only when kept/dropped differ by a factor
    of at least 10.  Raises :class:`ContourError` when an eigenvalue sits too
    close to the circle (resolvent norm above 1e8/radius at a quadrature node)
    and :class:`ResolutionError` when the singular-value gap is ambiguous.
    """
    a = numerics.as_matrix(section_array(m), square=True)
    q = int(quadrature_points)
    if q < 16:
        raise ValueError("need at least 16 quadrature points")
    radius = float(radius)
    if radius <= 0:
        raise ValueError("radius must be positive")
    center = complex(center)
    n = a.shape[0]
    eye = np.eye(n, dtype=complex)
    theta = 2.0 * np.pi * np.arange(q) / q
    nodes = center + radius * np.exp(1j * theta)
    limit = _PRECONDITION_RESNORM / radius
    family = _ShiftFamily(a)

    def resolvent_at(zq):
        try:
            fact = family.factor(zq)
        except scipy.linalg.LinAlgError as exc:
            raise ContourError(
                f"eigenvalue on the contour: factorization at node {zq} failed ({exc})"
            ) from exc
        est = fact.inverse_norm_estimate()
        if not np.isfinite(est) or est > limit:
            raise ContourError(
                f"eigenvalue too close to the contour: resolvent norm ~{est:.3e} "
                f"at node {zq} exceeds {limit:.3e}"
            )
        return fact.solve(eye)

    real_symmetric_setup = not np.iscomplexobj(a) and center.imag == 0.0 and q % 2 == 0
    if real_symmetric_setup:
        # nodes come in conjugate pairs, so the projection is real and only
        # the upper half circle needs solves: pair contribution is 2 Re(w X)
        proj = np.zeros((n, n))
        for k in range(q // 2 + 1):
            weight = (radius / q) * np.exp(1j * theta[k])
            contrib = (weight * resolvent_at(nodes[k])).real
            proj += contrib if k in (0, q // 2) else 2.0 * contrib
    else:
        proj = np.zeros((n, n), dtype=complex)
        for zq, th in zip(nodes, theta):
            proj += (radius / q) * np.exp(1j * th) * resolvent_at(zq)
    svals = _projection_singular_values(proj)
    rank = int(np.count_nonzero(svals > RANK_THRESHOLD))
    # the kept/dropped split only exists when both sides are nonempty
    if rank == 0 or rank == n:
        gap = np.inf
    else:
        kept, dropped = svals[rank - 1], svals[rank]
        gap = np.inf if dropped == 0.0 else float(kept / dropped)
    if gap < GAP_FACTOR:
        raise ResolutionError(
            f"ambiguous projection rank: kept/dropped singular-value ratio {gap:.2f} < "
            f"{GAP_FACTOR:g}; increase the quadrature point count (used {q})"
        )
    return ContourRank(
        center=center,
        radius=radius,
        quadrature_points=q,
        projection=proj,
        rank=rank,
        gap=float(gap),
        singular_values=svals,
    )
