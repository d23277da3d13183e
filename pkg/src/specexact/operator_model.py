"""Generative infinite operator matrices: truncation, block splitting, band profiles.

Index convention: entry rules take 1-based (i, j), matching the usual matrix
representation A_ij = <A e_j, e_i>; array storage is 0-based internally.
Specs are immutable after construction and all operations are pure.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DataError, PoleError

#: ratio-test threshold for the summability hints (cases b/c)
RATIO_THRESHOLD = 0.99


@dataclass(frozen=True)
class BandMeta:
    """Declared band structure: entries vanish for j - i > upper or i - j > lower.

    ``None`` for a bound means unbounded on that side.
    """

    lower: int | None
    upper: int | None


@dataclass(frozen=True)
class Provenance:
    name: str
    scheme: str
    size: int
    grid: tuple | None = None


@dataclass(frozen=True)
class SectionMatrix:
    """A dense finite section together with where it came from."""

    data: np.ndarray
    provenance: Provenance

    @property
    def shape(self):
        return self.data.shape


def section_array(m) -> np.ndarray:
    """Accept a SectionMatrix or a bare array-like, return the ndarray."""
    if isinstance(m, SectionMatrix):
        return m.data
    return np.asarray(m)


@dataclass(frozen=True)
class OperatorSpec:
    """An infinite matrix given by a pure entry rule (1-based indices)."""

    name: str
    entry_rule: Callable[[int, int], complex]
    band_meta: BandMeta | None = None

    def __post_init__(self):
        if self.band_meta is not None:
            # spot-check the declaration: sampled entries outside the band must vanish
            bm = self.band_meta
            for i in (1, 3, 11):
                for j in (1, 4, 13):
                    inside_upper = bm.upper is None or j - i <= bm.upper
                    inside_lower = bm.lower is None or i - j <= bm.lower
                    if inside_upper and inside_lower:
                        continue
                    if self.entry_rule(i, j) != 0:
                        raise DataError(
                            f"spec '{self.name}': declared band violated at ({i}, {j})"
                        )

    def entry(self, i: int, j: int) -> complex:
        if self.band_meta is not None:
            if self.band_meta.upper is not None and j - i > self.band_meta.upper:
                return 0.0
            if self.band_meta.lower is not None and i - j > self.band_meta.lower:
                return 0.0
        return complex(self.entry_rule(i, j))


def _assemble(spec: OperatorSpec, k: int) -> np.ndarray:
    out = np.zeros((k, k), dtype=np.complex128)
    bm = spec.band_meta
    for i in range(1, k + 1):
        # column range restricted by the declared band
        j_start = 1
        j_end = k
        if bm is not None:
            if bm.lower is not None:
                j_start = max(1, i - bm.lower)
            if bm.upper is not None:
                j_end = min(k, i + bm.upper)
        for j in range(j_start, j_end + 1):
            val = complex(spec.entry_rule(i, j))
            if val != val or abs(val) == np.inf:  # NaN or Inf
                raise DataError(f"spec '{spec.name}': non-finite entry at ({i}, {j})")
            out[i - 1, j - 1] = val
    if np.all(out.imag == 0.0):
        return out.real.copy()
    return out


def truncate(spec: OperatorSpec, k: int) -> SectionMatrix:
    """Leading k-by-k principal section (the Galerkin compression)."""
    if k < 1:
        raise ValueError(f"section size must be >= 1, got {k}")
    return SectionMatrix(
        data=_assemble(spec, int(k)),
        provenance=Provenance(name=spec.name, scheme="galerkin", size=int(k)),
    )


# ------------------------------- block splitting ------------------------------


@dataclass(frozen=True)
class BlockSplit:
    """Splitting A = T + S with T the block diagonal over the given cut points."""

    spec: OperatorSpec
    cut_points: tuple[int, ...]
    diagonal_blocks: tuple[np.ndarray, ...] = field(repr=False)

    def block_index(self, i: int) -> int:
        """1-based block number containing row/column i."""
        if i < 1 or i > self.cut_points[-1]:
            raise ValueError(f"index {i} outside the covered range 1..{self.cut_points[-1]}")
        return bisect.bisect_left(self.cut_points, i) + 1

    def coupling_rule(self, i: int, j: int) -> complex:
        """Entry rule of S = A - T: zero inside diagonal blocks."""
        if self.block_index(i) == self.block_index(j):
            return 0.0
        return self.spec.entry(i, j)

    def diag_section(self, k: int) -> np.ndarray:
        """Leading k-by-k section of T = diag(B_n)."""
        a = _assemble(self.spec, k)
        t = np.zeros_like(a)
        lo = 0
        for cut in self.cut_points:
            hi = min(cut, k)
            t[lo:hi, lo:hi] = a[lo:hi, lo:hi]
            if hi == k:
                break
            lo = hi
        else:
            raise ValueError(f"cut points cover only 1..{self.cut_points[-1]}, need {k}")
        return t

    def coupling_section(self, k: int) -> np.ndarray:
        """Leading k-by-k section of S = A - T (exact complement of diag_section)."""
        return _assemble(self.spec, k) - self.diag_section(k)


def split_blocks(spec: OperatorSpec, cut_points: Sequence[int]) -> BlockSplit:
    """Extract the diagonal blocks B_n = (A_ij) for k_{n-1} < i, j <= k_n."""
    cuts = tuple(int(c) for c in cut_points)
    if not cuts or any(c2 <= c1 for c1, c2 in zip(cuts, cuts[1:])) or cuts[0] < 1:
        raise ValueError("cut points must be strictly increasing positive integers")
    a = _assemble(spec, cuts[-1])
    blocks = []
    lo = 0
    for cut in cuts:
        blocks.append(a[lo:cut, lo:cut].copy())
        lo = cut
    return BlockSplit(spec=spec, cut_points=cuts, diagonal_blocks=tuple(blocks))


# -------------------------------- band profiles -------------------------------


@dataclass
class BandProfile:
    """Nonzero counts and envelope constants of a scanned leading section.

    Arrays are stored 0-based: ``row_counts[i-1]`` is #N_i, ``col_envelope[j-1]``
    is D_j, and the partial sums are cumulative in the scan index (hence
    monotone nondecreasing).  ``hint`` is trend evidence for the summability
    cases {a, b, c} -- never a proof.
    """

    scan_limit: int
    normalized: bool
    lam: complex | None
    row_counts: np.ndarray
    col_counts: np.ndarray
    row_envelope: np.ndarray
    col_envelope: np.ndarray
    row_partial_sums: np.ndarray
    col_partial_sums: np.ndarray
    hint: str
    rows_stable: bool
    cols_stable: bool
    max_counts_stable: bool
    envelope_bounded: bool

    @property
    def max_row_count(self) -> int:
        return int(self.row_counts.max()) if self.row_counts.size else 0

    @property
    def max_col_count(self) -> int:
        return int(self.col_counts.max()) if self.col_counts.size else 0


def _decade_ratio(terms: np.ndarray) -> float:
    """Geometric per-step ratio of the nonzero terms over the last decade of indices."""
    limit = terms.shape[0]
    start = max(0, limit // 10 - 1)
    idx = np.nonzero(terms[start:] > 0)[0] + start
    if idx.size < 2:
        return np.inf
    first, last = idx[0], idx[-1]
    if terms[last] >= terms[first]:
        return np.inf if terms[first] == 0 else (terms[last] / terms[first]) ** (1.0 / (last - first))
    return float((terms[last] / terms[first]) ** (1.0 / (last - first)))


def band_profile(
    spec: OperatorSpec,
    scan_limit: int,
    lam: complex | None = None,
    normalize_by_diag: bool = False,
) -> BandProfile:
    """Profile #N_i, #M_j, C_i, D_j over the leading section of size ``scan_limit``.

    With ``normalize_by_diag`` the profiled matrix is B = S (T - lam)^{-1}
    where T is the diagonal part, i.e. B_ij = A_ij / (A_jj - lam) off the
    diagonal and 0 on it; lam must avoid every scanned diagonal entry.
    """
    if scan_limit < 2:
        raise ValueError("scan_limit must be >= 2")
    a = _assemble(spec, scan_limit)
    if normalize_by_diag:
        if lam is None:
            raise ValueError("normalize_by_diag requires lam")
        d = np.diag(a) - lam
        bad = np.nonzero(np.abs(d) <= 1e-12)[0]
        if bad.size:
            raise PoleError(
                f"lam = {lam} hits the diagonal entry at j = {bad[0] + 1}", index=int(bad[0] + 1)
            )
        b = a / d[np.newaxis, :]
        np.fill_diagonal(b, 0.0)
    else:
        b = a

    mags = np.abs(b)
    nz = mags > 0.0
    row_counts = nz.sum(axis=1)
    col_counts = nz.sum(axis=0)
    row_env = mags.max(axis=1)
    col_env = mags.max(axis=0)
    row_terms = row_env**2 * row_counts
    col_terms = col_env**2 * col_counts
    row_psums = np.cumsum(row_terms)
    col_psums = np.cumsum(col_terms)

    # stability diagnostics: compare against the half-scan subsection
    half = scan_limit // 2
    quarter = scan_limit // 4
    nz_half = nz[:half, :half]
    if quarter >= 1:
        rows_stable = bool(np.array_equal(nz_half[:quarter].sum(axis=1), row_counts[:quarter]))
        cols_stable = bool(np.array_equal(nz_half[:, :quarter].sum(axis=0), col_counts[:quarter]))
    else:
        rows_stable = cols_stable = True
    max_stable = bool(
        (nz_half.sum(axis=1).max(initial=0) == row_counts.max(initial=0))
        and (nz_half.sum(axis=0).max(initial=0) == col_counts.max(initial=0))
    )
    env_half = mags[:half, :half].max(initial=0.0)
    env_full = mags.max(initial=0.0)
    envelope_bounded = bool(env_full <= env_half * (1 + 1e-12) + 1e-300)

    if rows_stable and cols_stable and max_stable:
        hint = "a"
    elif rows_stable and _decade_ratio(row_terms) < RATIO_THRESHOLD:
        hint = "b"
    elif cols_stable and _decade_ratio(col_terms) < RATIO_THRESHOLD:
        hint = "c"
    else:
        hint = "none"

    return BandProfile(
        scan_limit=scan_limit,
        normalized=normalize_by_diag,
        lam=lam,
        row_counts=row_counts,
        col_counts=col_counts,
        row_envelope=row_env,
        col_envelope=col_env,
        row_partial_sums=row_psums,
        col_partial_sums=col_psums,
        hint=hint,
        rows_stable=rows_stable,
        cols_stable=cols_stable,
        max_counts_stable=max_stable,
        envelope_bounded=envelope_bounded,
    )


# -------------------------------- built-in specs ------------------------------


def jacobi_offdiag(k: int) -> float:
    """Off-diagonal weights q_k: k+1 for odd k, k/2 for even k."""
    return float(k + 1) if k % 2 == 1 else k / 2.0


def jacobi_spec() -> OperatorSpec:
    """Selfadjoint Jacobi matrix with zero diagonal and weights ``jacobi_offdiag``.

    Block-aligned cuts (2, 4, 6, ...) give B_n = [[0, 2n], [2n, 0]]; the full
    Galerkin family produces an eigenvalue 0 on every odd section.
    """

    def rule(i: int, j: int) -> float:
        if j == i + 1:
            return jacobi_offdiag(i)
        if i == j + 1:
            return jacobi_offdiag(j)
        return 0.0

    return OperatorSpec(name="jacobi", entry_rule=rule, band_meta=BandMeta(1, 1))


def upper_triangular_spec() -> OperatorSpec:
    """Upper triangular matrix with A_ij = j above the diagonal and A_jj = j^3."""

    def rule(i: int, j: int) -> float:
        if i < j:
            return float(j)
        if i == j:
            return float(j) ** 3
        return 0.0

    return OperatorSpec(name="upper_triangular", entry_rule=rule, band_meta=BandMeta(0, None))


def diagonal_spec(diag: Callable[[int], complex], name: str = "diagonal") -> OperatorSpec:
    def rule(i: int, j: int) -> complex:
        return diag(i) if i == j else 0.0

    return OperatorSpec(name=name, entry_rule=rule, band_meta=BandMeta(0, 0))


def identity_spec() -> OperatorSpec:
    return diagonal_spec(lambda i: 1.0, name="identity")


def custom_banded_spec(
    table: Sequence[Sequence[complex]], tail: str = "zero", name: str = "custom_banded"
) -> OperatorSpec:
    """Spec from a finite entry table plus a tail rule.

    ``tail='zero'``: entries outside the table vanish.  ``tail='repeat_edge'``:
    each diagonal (offset j - i) continues beyond the table with its last
    tabulated value, so constant-band operators extend naturally.
    """
    arr = np.asarray(table, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise DataError("custom_banded table must be a nonempty square matrix")
    if not np.all(np.isfinite(arr)):
        raise DataError("custom_banded table has a non-finite entry")
    if tail not in ("zero", "repeat_edge"):
        raise ValueError(f"unknown tail rule {tail!r}; choose 'zero' or 'repeat_edge'")
    s = arr.shape[0]

    def rule(i: int, j: int) -> complex:
        if i <= s and j <= s:
            return arr[i - 1, j - 1]
        if tail == "zero":
            return 0.0
        off = j - i
        if abs(off) >= s:
            return 0.0
        # last tabulated entry on this diagonal
        if off >= 0:
            return arr[s - 1 - off, s - 1]
        return arr[s - 1, s - 1 + off]

    return OperatorSpec(name=name, entry_rule=rule)
