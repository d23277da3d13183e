"""Eigenvalue trajectories across truncation ladders and pollution classification.

A limit candidate found on the user's *certified* ladder (the family asserted
to satisfy the spectral-exactness hypotheses) is classified by two pieces of
evidence: a region-of-boundedness probe at the candidate and the stabilized
contour-projection rank.  A candidate where the certified ladder stays
bounded while an uncertified ladder's eigenvalues accumulate is flagged as
spurious.  Verdicts carry their evidence trail and are never silently
upgraded to proofs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import numerics, resolvent_analysis as ra
from .errors import ContourError, ResolutionError
from .resolvent_analysis import ProbeVerdict, RegionProbe, SectionLadder

#: clustering radius for candidate merging: max(CAND_REL * scale, CAND_TOL_FACTOR * tol)
CAND_REL = 1e-6
CAND_TOL_FACTOR = 10.0
#: contour radius selection: half the gap to the next candidate, clamped
CONTOUR_RADIUS_CAP = 1.0
CONTOUR_RADIUS_FLOOR_FACTOR = 100.0
#: ranks must agree over this many trailing ladder sizes
STABLE_RANKS = 3


class ClassVerdict(str, enum.Enum):
    TRUE_EIGENVALUE = "TrueEigenvalue"
    SPURIOUS = "Spurious"
    UNDECIDED = "Undecided"


@dataclass
class SpectrumResult:
    """Eigenvalues (with residuals) of one section, tagged by its ladder size."""

    size: object
    eigenvalues: np.ndarray
    residuals: np.ndarray | None = None

    @classmethod
    def from_eig(cls, size, decomposition: numerics.EigenDecomposition) -> "SpectrumResult":
        return cls(
            size=size,
            eigenvalues=decomposition.eigenvalues.copy(),
            residuals=decomposition.residuals.copy(),
        )

    def windowed(self, window) -> "SpectrumResult":
        """Restrict to the closed rectangle (re0, re1, im0, im1)."""
        re0, re1, im0, im1 = window
        w = self.eigenvalues
        keep = (w.real >= re0) & (w.real <= re1) & (w.imag >= im0) & (w.imag <= im1)
        return SpectrumResult(
            size=self.size,
            eigenvalues=w[keep],
            residuals=None if self.residuals is None else self.residuals[keep],
        )


@dataclass
class Trajectory:
    """One matched eigenvalue path along the ladder; sizes strictly increasing."""

    sizes: list = field(default_factory=list)
    values: list = field(default_factory=list)

    def append(self, size, value: complex) -> None:
        self.sizes.append(size)
        self.values.append(complex(value))

    def __len__(self) -> int:
        return len(self.values)

    @property
    def last(self) -> complex:
        return self.values[-1]

    def cauchy_tail(self) -> float:
        """Max consecutive step over (roughly) the last third of the path."""
        if len(self.values) < 2:
            return float("inf")
        diffs = np.abs(np.diff(np.asarray(self.values)))
        k = max(1, diffs.shape[0] // 3)
        return float(diffs[-k:].max())


def _nn_spacing_radius(values: np.ndarray) -> float:
    """Default matching radius: half the median nearest-neighbor spacing."""
    if values.shape[0] < 2:
        return float("inf")
    dist = np.abs(values[:, None] - values[None, :])
    np.fill_diagonal(dist, np.inf)
    nn = dist.min(axis=1)
    med = float(np.median(nn))
    return float("inf") if med == 0.0 else 0.5 * med


def match_trajectories(
    spectra: Sequence[SpectrumResult], match_radius: float | None = None
) -> list[Trajectory]:
    """Pair eigenvalues between consecutive sizes by minimum-total-cost assignment.

    Cost is |lam - mu|; pairs costlier than the matching radius are cut (the
    trajectory ends and a new one starts).  Spectra are lex-sorted first so
    ties break deterministically by (Re, Im).
    """
    if len(spectra) < 2:
        raise ValueError("need a ladder of at least 2 spectra")
    sizes = [s.size for s in spectra]
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("spectra must come in strictly increasing size order")

    sorted_vals = []
    for s in spectra:
        w = np.asarray(s.eigenvalues, dtype=complex)
        sorted_vals.append(w[np.lexsort((w.imag, w.real))])

    trajectories: list[Trajectory] = []
    active: dict[int, Trajectory] = {}
    for j, v in enumerate(sorted_vals[0]):
        t = Trajectory()
        t.append(sizes[0], v)
        trajectories.append(t)
        active[j] = t

    for step in range(1, len(spectra)):
        prev, curr = sorted_vals[step - 1], sorted_vals[step]
        radius = match_radius
        if radius is None:
            smaller = prev if prev.shape[0] <= curr.shape[0] else curr
            radius = _nn_spacing_radius(smaller)
        next_active: dict[int, Trajectory] = {}
        if prev.size and curr.size:
            cost = np.abs(prev[:, None] - curr[None, :])
            rows, cols = linear_sum_assignment(cost)
            for i, j in zip(rows, cols):
                if cost[i, j] <= radius and i in active:
                    t = active[i]
                    t.append(sizes[step], curr[j])
                    next_active[j] = t
        for j, v in enumerate(curr):
            if j not in next_active:
                t = Trajectory()
                t.append(sizes[step], v)
                trajectories.append(t)
                next_active[j] = t
        active = next_active
    return trajectories


@dataclass
class LimitCandidate:
    """A converged limit point with merged multiplicity and its source paths."""

    value: complex
    multiplicity: int
    trajectories: list[Trajectory] = field(repr=False, default_factory=list)


def detect_limits(
    trajectories: Sequence[Trajectory],
    tol: float,
    *,
    ladder_length: int,
    scale: float | None = None,
) -> list[LimitCandidate]:
    """Converged trajectories become candidates; nearby candidates merge.

    A trajectory qualifies when its Cauchy tail is below ``tol`` and it spans
    at least half the ladder.  Candidates closer than
    max(1e-6 * scale, 10 * tol) merge with multiplicities summed; ``scale``
    defaults to the largest eigenvalue magnitude seen.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    qualified = [
        t
        for t in trajectories
        if len(t) >= max(2, -(-ladder_length // 2)) and t.cauchy_tail() < tol
    ]
    if not qualified:
        return []
    if scale is None:
        scale = max(
            (float(np.abs(np.asarray(t.values)).max()) for t in trajectories if len(t)),
            default=0.0,
        )
    radius = max(CAND_REL * scale, CAND_TOL_FACTOR * tol)
    values = np.asarray([t.last for t in qualified])
    order = np.lexsort((values.imag, values.real))
    groups: list[list[int]] = []
    for idx in order:
        for g in groups:
            if abs(values[idx] - values[g[0]]) <= radius:
                g.append(idx)
                break
        else:
            groups.append([idx])
    out = []
    for g in groups:
        member_vals = values[g]
        out.append(
            LimitCandidate(
                value=complex(member_vals.mean()),
                multiplicity=len(g),
                trajectories=[qualified[i] for i in g],
            )
        )
    out.sort(key=lambda c: (c.value.real, c.value.imag))
    return out


def candidate_radius(lam: complex, others: Sequence[complex], clustering_radius: float) -> float:
    """Contour radius: half the gap to the nearest other candidate, clamped.

    The floor (100x clustering radius) lifts radii that would drown in
    cluster noise; the cap 1.0 always wins.  Candidates denser than the floor
    make the contour precondition fail downstream, which is the intended
    contour-blocked degradation.
    """
    gap = min((abs(lam - o) for o in others if o != lam), default=np.inf)
    floor = CONTOUR_RADIUS_FLOOR_FACTOR * clustering_radius
    return min(CONTOUR_RADIUS_CAP, max(gap / 2.0, floor))


@dataclass
class ClassifiedPoint:
    """Classification of one limit candidate with its full evidence trail."""

    value: complex
    verdict: ClassVerdict
    multiplicity: int | None
    probe: RegionProbe
    rank_sizes: list = field(default_factory=list)
    ranks: list = field(default_factory=list)
    source: str = ""
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "lambda": [self.value.real, self.value.imag],
            "verdict": self.verdict.value,
            "multiplicity": self.multiplicity,
            "probe": self.probe.to_dict(),
            "rank_sizes": list(self.rank_sizes),
            "ranks": list(self.ranks),
            "source": self.source,
            "note": self.note,
        }


def classify_point(
    lam: complex,
    certified: SectionLadder,
    uncertified: SectionLadder | None = None,
    *,
    tol: float = 1e-6,
    neighbors: Sequence[complex] = (),
    quadrature_points: int = ra.DEFAULT_QUADRATURE,
    probe_kwargs: dict | None = None,
) -> ClassifiedPoint:
    """Classify a limit candidate as TrueEigenvalue(m) / Spurious / Undecided.

    TrueEigenvalue requires UnboundedEvidence at ``lam`` on the certified
    ladder plus contour ranks stabilized at m >= 1 over the last three
    certified sizes.  Spurious requires BoundedEvidence on the certified
    ladder while the uncertified ladder's eigenvalues accumulate at ``lam``
    for at least half its sizes.  A blocked contour degrades the verdict to
    Undecided with a note, never an exception.
    """
    lam = complex(lam)
    probe = ra.region_probe(certified, lam, **(probe_kwargs or {}))
    clustering_radius = max(CAND_REL * probe.scale, CAND_TOL_FACTOR * tol)

    if probe.verdict is ProbeVerdict.UNBOUNDED:
        radius = candidate_radius(lam, neighbors, clustering_radius)
        sizes = certified.sizes[-STABLE_RANKS:]
        ranks: list[int | None] = []
        note = ""
        for size in sizes:
            try:
                ranks.append(
                    ra.contour_rank(
                        certified.matrix(size), lam, radius, quadrature_points=quadrature_points
                    ).rank
                )
            except (ContourError, ResolutionError) as exc:
                ranks.append(None)
                note = f"contour-blocked at size {size}: {exc}"
        good = [r for r in ranks if r is not None]
        if len(good) == len(sizes) and len(set(good)) == 1 and good[0] >= 1:
            return ClassifiedPoint(
                value=lam,
                verdict=ClassVerdict.TRUE_EIGENVALUE,
                multiplicity=good[0],
                probe=probe,
                rank_sizes=list(sizes),
                ranks=ranks,
                source=certified.label,
            )
        return ClassifiedPoint(
            value=lam,
            verdict=ClassVerdict.UNDECIDED,
            multiplicity=None,
            probe=probe,
            rank_sizes=list(sizes),
            ranks=ranks,
            source=certified.label,
            note=note or "contour ranks did not stabilize at m >= 1",
        )

    if probe.verdict is ProbeVerdict.BOUNDED and uncertified is not None:
        hits = 0
        for size in uncertified.sizes:
            w = uncertified.spectrum(size).eigenvalues
            if w.size and np.min(np.abs(w - lam)) <= clustering_radius:
                hits += 1
        if 2 * hits >= len(uncertified.sizes):
            return ClassifiedPoint(
                value=lam,
                verdict=ClassVerdict.SPURIOUS,
                multiplicity=None,
                probe=probe,
                source=f"{certified.label} (certified) vs {uncertified.label} (uncertified)",
                note=f"uncertified eigenvalues within {clustering_radius:.3e} at "
                f"{hits}/{len(uncertified.sizes)} sizes",
            )
        return ClassifiedPoint(
            value=lam,
            verdict=ClassVerdict.UNDECIDED,
            multiplicity=None,
            probe=probe,
            source=certified.label,
            note="bounded on the certified ladder; no uncertified accumulation",
        )

    note = (
        "in resolvent set: no trajectory converges here"
        if probe.verdict is ProbeVerdict.BOUNDED
        else "probe inconclusive"
    )
    return ClassifiedPoint(
        value=lam,
        verdict=ClassVerdict.UNDECIDED,
        multiplicity=None,
        probe=probe,
        source=certified.label,
        note=note,
    )


@dataclass
class MultiplicityCheck:
    """Per-size contour ranks with the stabilized value, if any."""

    value: complex
    sizes: list
    ranks: list
    multiplicity: int | None
    first_stable_size: object | None
    note: str = ""


def multiplicity_check(
    lam: complex,
    certified: SectionLadder,
    *,
    radius: float | None = None,
    quadrature_points: int = ra.DEFAULT_QUADRATURE,
) -> MultiplicityCheck:
    """Contour rank per ladder size; the multiplicity is the stabilized value.

    Non-stabilizing ranks produce an instability note, not an exception.
    The default radius is half the spectral gap around ``lam`` in the largest
    section (clamped like the classifier's contours).
    """
    lam = complex(lam)
    if radius is None:
        w = certified.spectrum(certified.sizes[-1]).eigenvalues
        spectrum_scale = max(float(np.abs(w).max(initial=0.0)), 1.0)
        near = CAND_REL * spectrum_scale
        outside = np.abs(w - lam)[np.abs(w - lam) > max(near, 1e-12)]
        gap = float(outside.min()) if outside.size else np.inf
        radius = min(CONTOUR_RADIUS_CAP, max(gap / 2.0, CONTOUR_RADIUS_FLOOR_FACTOR * near))
    ranks: list[int | None] = []
    note = ""
    for size in certified.sizes:
        try:
            ranks.append(
                ra.contour_rank(
                    certified.matrix(size), lam, radius, quadrature_points=quadrature_points
                ).rank
            )
        except (ContourError, ResolutionError) as exc:
            ranks.append(None)
            note = f"contour-blocked at size {size}: {exc}"
    multiplicity = None
    first_stable = None
    good = [(s, r) for s, r in zip(certified.sizes, ranks) if r is not None]
    if len(good) >= STABLE_RANKS:
        tail = [r for _, r in good[-STABLE_RANKS:]]
        if len(set(tail)) == 1:
            multiplicity = tail[0]
            # walk back to the first size of the final constant run
            first_stable = good[-STABLE_RANKS][0]
            for s, r in reversed(good):
                if r == multiplicity:
                    first_stable = s
                else:
                    break
    if multiplicity is None and not note:
        note = "ranks did not stabilize over the last three sizes"
    return MultiplicityCheck(
        value=lam,
        sizes=list(certified.sizes),
        ranks=ranks,
        multiplicity=multiplicity,
        first_stable_size=first_stable,
        note=note,
    )


def track_and_classify(
    certified: SectionLadder,
    uncertified: SectionLadder | None = None,
    *,
    window=None,
    tol: float = 1e-6,
    quadrature_points: int = ra.DEFAULT_QUADRATURE,
) -> list[ClassifiedPoint]:
    """Full pipeline: spectra -> trajectories -> limits -> classification.

    ``window`` restricts tracking to a rectangle (re0, re1, im0, im1); the
    inclusion evidence is only about candidates found there.
    """
    spectra = []
    for size in certified.sizes:
        s = SpectrumResult.from_eig(size, certified.spectrum(size))
        spectra.append(s.windowed(window) if window is not None else s)
    trajectories = match_trajectories(spectra)
    candidates = detect_limits(trajectories, tol, ladder_length=len(certified.sizes))
    values = [c.value for c in candidates]
    out = []
    for cand in candidates:
        out.append(
            classify_point(
                cand.value,
                certified,
                uncertified,
                tol=tol,
                neighbors=[v for v in values if v != cand.value],
                quadrature_points=quadrature_points,
            )
        )
    return out
