"""Computable sufficient-condition constants, reported as pass/fail evidence.

Each checker evaluates the finite-section counterpart of one theorem's
hypothesis and reports the computed constants together with a verdict.
Sups over the truncation family are sups over the computed ladder; a
margin (default 1e-3) guards the strict inequalities.  Verdicts are
evidence about the scanned range, never proofs about all n.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import numerics
from .errors import AssumptionError, PoleError
from .operator_model import BandProfile, section_array

DEFAULT_MARGIN = 1e-3
POLE_REL = 1e-12


class Verdict(str, enum.Enum):
    PASS = "PassEvidence"
    FAIL = "FailEvidence"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class HypothesisReport:
    """Computed constants and per-size evidence for one theorem hypothesis."""

    theorem: str
    lam: complex | None
    constants: dict
    per_size: dict
    verdict: Verdict
    notes: str = ""

    def to_dict(self) -> dict:
        def enc(v):
            if isinstance(v, complex):
                return [v.real, v.imag]
            if isinstance(v, np.bool_):
                return bool(v)
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            if isinstance(v, np.ndarray):
                return [enc(x) for x in v.tolist()]
            if isinstance(v, (list, tuple)):
                return [enc(x) for x in v]
            if isinstance(v, bool):
                return v
            return v

        return {
            "theorem": self.theorem,
            "lambda": None if self.lam is None else [self.lam.real, self.lam.imag],
            "constants": {k: enc(v) for k, v in self.constants.items()},
            "per_size": {k: enc(v) for k, v in self.per_size.items()},
            "verdict": self.verdict.value,
            "notes": self.notes,
        }


def _resolvent_of(section, lam: complex, size, what: str) -> np.ndarray:
    a = numerics.as_matrix(section_array(section), square=True)
    if lam.imag == 0.0 and not np.iscomplexobj(a):
        shifted = a - lam.real * np.eye(a.shape[0])
    else:
        shifted = a - lam * np.eye(a.shape[0])
    scale = max(numerics.op_norm(a), 1.0)
    if numerics.sigma_min(shifted) <= POLE_REL * scale:
        raise PoleError(f"lambda = {lam} is (numerically) in the spectrum of {what}", index=size)
    return np.linalg.inv(shifted)


def relative_bound(
    t_sections: Sequence,
    s_sections: Sequence,
    lam: complex,
    sizes: Sequence | None = None,
    *,
    margin: float = DEFAULT_MARGIN,
    tag: str = "PerturbGSR",
) -> HypothesisReport:
    """gamma_n = ||S_n (T_n - lam)^{-1}|| per section; PassEvidence iff sup <= 1 - margin.

    ``tag`` selects which perturbation theorem the report is filed under
    ('PerturbGSR' for resolvent convergence, 'PerturbDiscComp' for discrete
    compactness -- the computed quantity is the same).
    """
    lam = complex(lam)
    if len(t_sections) != len(s_sections):
        raise ValueError("need matching T and S section lists")
    sizes = list(sizes) if sizes is not None else [section_array(t).shape[0] for t in t_sections]
    gammas = []
    for size, t, s in zip(sizes, t_sections, s_sections):
        resolvent = _resolvent_of(t, lam, size, f"T-section at size {size}")
        gammas.append(numerics.op_norm(section_array(s) @ resolvent))
    gammas = np.asarray(gammas)
    sup = float(gammas.max())
    third = max(1, len(gammas) // 3)
    verdict = Verdict.PASS if sup <= 1.0 - margin else Verdict.FAIL
    return HypothesisReport(
        theorem=tag,
        lam=lam,
        constants={"gamma_sup": sup, "margin": margin},
        per_size={
            "sizes": sizes,
            "gamma": gammas,
            "head_mean": float(gammas[:third].mean()),
            "tail_mean": float(gammas[-third:].mean()),
        },
        verdict=verdict,
    )


def gamma_product_2x2(
    a_sections: Sequence,
    b_sections: Sequence,
    c_sections: Sequence,
    d_sections: Sequence,
    lam: complex,
    sizes: Sequence | None = None,
    *,
    margin: float = DEFAULT_MARGIN,
) -> HypothesisReport:
    """gamma^AC = sup ||C_n (A_n-lam)^{-1}||, gamma^DB = sup ||B_n (D_n-lam)^{-1}||.

    PassEvidence iff the product is <= 1 - margin.
    """
    lam = complex(lam)
    lengths = {len(a_sections), len(b_sections), len(c_sections), len(d_sections)}
    if len(lengths) != 1:
        raise ValueError("the four section lists must have equal length")
    sizes = list(sizes) if sizes is not None else [section_array(a).shape[0] for a in a_sections]
    g_ac, g_db = [], []
    for size, a, b, c, d in zip(sizes, a_sections, b_sections, c_sections, d_sections):
        res_a = _resolvent_of(a, lam, size, f"A-section at size {size}")
        res_d = _resolvent_of(d, lam, size, f"D-section at size {size}")
        g_ac.append(numerics.op_norm(section_array(c) @ res_a))
        g_db.append(numerics.op_norm(section_array(b) @ res_d))
    gamma_ac = float(np.max(g_ac))
    gamma_db = float(np.max(g_db))
    product = gamma_ac * gamma_db
    return HypothesisReport(
        theorem="TwoByTwo",
        lam=lam,
        constants={"gamma_ac": gamma_ac, "gamma_db": gamma_db, "product": product, "margin": margin},
        per_size={"sizes": sizes, "gamma_ac": np.asarray(g_ac), "gamma_db": np.asarray(g_db)},
        verdict=Verdict.PASS if product <= 1.0 - margin else Verdict.FAIL,
    )


def uniform_resolvent_decay(
    block_family: Sequence,
    lam: complex,
    js: Sequence | None = None,
    *,
    tag: str = "DiagonalDecay",
    decay_factor: float = 2.0,
    tail_threshold: float = 0.1,
) -> HypothesisReport:
    """Decay profile d_j = sup_n ||(B_j^{(n)} - lam)^{-1}|| along the block index.

    ``block_family[j]`` is either one matrix B_j or a sequence over the inner
    n-range.  PassEvidence iff the head-third geometric mean exceeds the
    tail-third one by at least ``decay_factor`` and the tail minimum is below
    ``tail_threshold``.  File under 'Galerkin' via ``tag`` when the blocks come
    from a block-aligned finite-section splitting.
    """
    lam = complex(lam)
    profile = []
    js = list(js) if js is not None else list(range(1, len(block_family) + 1))
    for j, entry in zip(js, block_family):
        mats = entry if isinstance(entry, (list, tuple)) else [entry]
        sup = 0.0
        for mat in mats:
            a = numerics.as_matrix(section_array(mat), square=True)
            shifted = a - (lam.real if lam.imag == 0 and not np.iscomplexobj(a) else lam) * np.eye(
                a.shape[0]
            )
            smin = numerics.sigma_min(shifted)
            if smin <= POLE_REL * max(numerics.op_norm(a), 1.0):
                raise PoleError(f"lambda = {lam} hits block j = {j}", index=j)
            sup = max(sup, 1.0 / smin)
        profile.append(sup)
    profile = np.asarray(profile)
    third = max(1, len(profile) // 3)
    head = float(np.exp(np.mean(np.log(profile[:third]))))
    tail = float(np.exp(np.mean(np.log(profile[-third:]))))
    tail_min = float(profile[-third:].min())
    ok = head >= decay_factor * tail and tail_min < tail_threshold
    return HypothesisReport(
        theorem=tag,
        lam=lam,
        constants={
            "head_geomean": head,
            "tail_geomean": tail,
            "tail_min": tail_min,
            "decay_factor": decay_factor,
            "tail_threshold": tail_threshold,
        },
        per_size={"j": js, "d": profile},
        verdict=Verdict.PASS if ok else Verdict.FAIL,
    )


def sl_coercivity(p_min: float, q_min: float, beta: float) -> float:
    """Coercivity constant of the truncated Sturm-Liouville form.

    q_min for beta in [pi/2, pi); q_min - 2 tan(beta)^2 / p_min on [0, pi/2).
    """
    if p_min <= 0:
        raise ValueError(f"p_min must be positive, got {p_min}")
    if not 0.0 <= beta < np.pi:
        raise ValueError(f"beta must lie in [0, pi), got {beta}")
    if beta >= np.pi / 2:
        return float(q_min)
    return float(q_min - 2.0 * np.tan(beta) ** 2 / p_min)


# ------------------------- lambda_0 selection for 2x2 SL -------------------------

EPS_GRID = (0.5, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001)
LINE_SAMPLES = 10_000


def _line_angle(gamma: complex) -> float:
    """Direction angle of the line gamma * R, folded into [0, pi)."""
    ang = np.angle(gamma) % np.pi
    return float(ang)


def _angle_to_line(direction: float, line: float) -> float:
    """Minimal angle in [0, pi/2] between a ray direction and a line (mod pi)."""
    d = abs((direction - line) % np.pi)
    return min(d, np.pi - d)


def _sup_ratio(lam0: complex, line_angle: float, samples: int) -> float:
    """max over the line of |xi| / |xi - lam0|, by dense sampling plus the limit 1."""
    r = 10.0 * abs(lam0)
    ts = np.linspace(-r, r, samples)
    xs = ts * np.exp(1j * line_angle)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.abs(xs) / np.abs(xs - lam0)
    vals = vals[np.isfinite(vals)]
    return float(max(vals.max(initial=0.0), 1.0))


def sl_lambda0_search(
    gamma1: complex,
    gamma2: complex,
    sup_s: float,
    sup_t: float,
    sup_u: float,
    sup_v: float,
    *,
    eps_grid: Sequence[float] = EPS_GRID,
    samples: int = LINE_SAMPLES,
) -> HypothesisReport:
    """Find (lambda_0, eps) off both lines gamma_i R satisfying the 2x2 SL criteria.

    Candidates sit on the bisector ray maximizing the angle to both lines, at
    radius sqrt(2) / (eps sin(theta_min)).  A candidate passes when, for both
    lines, the sampled sup of |xi|/|xi - lambda_0| stays <= 1 + eps and
    dist(lambda_0, gamma_i R) >= 1/eps, and the relaxed coupling bounds satisfy

        (|u|/|g1| (1+eps) + |v| eps) (|s|/|g2| (1+eps) + |t| eps) < 1.

    The first grid candidate that passes is returned; otherwise FailEvidence
    with the best product found.
    """
    gamma1, gamma2 = complex(gamma1), complex(gamma2)
    if gamma1 == 0 or gamma2 == 0:
        raise ValueError("gamma1, gamma2 must be nonzero")
    if not sup_s * sup_u < abs(gamma1) * abs(gamma2):
        raise AssumptionError(
            f"precondition |s| |u| < |gamma1| |gamma2| fails: "
            f"{sup_s * sup_u} >= {abs(gamma1) * abs(gamma2)}"
        )
    phi1, phi2 = _line_angle(gamma1), _line_angle(gamma2)
    psi_candidates = ((phi1 + phi2) / 2.0, (phi1 + phi2) / 2.0 + np.pi / 2.0)
    psi = max(psi_candidates, key=lambda d: min(_angle_to_line(d, phi1), _angle_to_line(d, phi2)))
    theta_min = min(_angle_to_line(psi, phi1), _angle_to_line(psi, phi2))

    best = None
    for eps in eps_grid:
        radius = np.sqrt(2.0) / (eps * np.sin(theta_min))
        lam0 = radius * np.exp(1j * psi)
        sup1 = _sup_ratio(lam0, phi1, samples)
        sup2 = _sup_ratio(lam0, phi2, samples)
        dist1 = abs(lam0) * np.sin(_angle_to_line(psi, phi1))
        dist2 = abs(lam0) * np.sin(_angle_to_line(psi, phi2))
        bound1 = sup_u / abs(gamma1) * (1.0 + eps) + sup_v * eps
        bound2 = sup_s / abs(gamma2) * (1.0 + eps) + sup_t * eps
        product = bound1 * bound2
        sup_ok = sup1 <= 1.0 + eps and sup2 <= 1.0 + eps
        dist_ok = dist1 >= 1.0 / eps and dist2 >= 1.0 / eps
        product_ok = product < 1.0
        record = {
            "eps": eps,
            "lambda0": lam0,
            "theta_min": theta_min,
            "sup_ratio_1": sup1,
            "sup_ratio_2": sup2,
            "dist_1": dist1,
            "dist_2": dist2,
            "gamma_bound_1": bound1,
            "gamma_bound_2": bound2,
            "product": product,
            "sup_ok": sup_ok,
            "dist_ok": dist_ok,
            "product_ok": product_ok,
        }
        if sup_ok and dist_ok and product_ok:
            return HypothesisReport(
                theorem="SLMatrix",
                lam=lam0,
                constants=record,
                per_size={},
                verdict=Verdict.PASS,
                notes="self-audit: all three inequality groups re-evaluate true",
            )
        if sup_ok and dist_ok and (best is None or product < best["product"]):
            best = record
    return HypothesisReport(
        theorem="SLMatrix",
        lam=None if best is None else best["lambda0"],
        constants=best or {"product": float("inf")},
        per_size={},
        verdict=Verdict.FAIL,
        notes="no grid candidate satisfied all three inequalities"
        + ("" if best else " (sup/dist conditions never met)"),
    )


# --------------------------- Schrodinger constant pipeline ---------------------------

KNOB_GRID = tuple(np.geomspace(1e-4, 1.0, 33))  # 8 points per decade over [1e-4, 1]
LAMBDA_EXPONENTS = tuple(range(0, 9))  # lambda_0 scanned over -10^k


def schrodinger_constants(prob_or_constants, *, knob_grid=KNOB_GRID) -> HypothesisReport:
    """Grid-search the constants (nu, beta, alpha, eps, delta) and lambda_0 < 0.

    Pipeline: b = max(beta (1 + 1/(4 nu)), b_r (1 + nu)) < 1,
    a = |p|_inf^4 / (4 beta) (1 + 1/(4 nu)) + a_r (1 + nu),
    C_alpha = eps a_grad + 1/(4 eps delta) subject to max(delta/eps, eps b_grad) <= alpha,
    gamma^2 = (a + b C_alpha / (1 - alpha)) / lambda_0^2 + b / (1 - alpha).

    Returns the knob combination minimizing |lambda_0| (then gamma) with
    gamma < 1, or FailEvidence with the best gamma found.
    """
    if hasattr(prob_or_constants, "assumption_constants"):
        consts = prob_or_constants.assumption_constants()
    else:
        consts = dict(prob_or_constants)
    a_grad, b_grad = float(consts["a_grad"]), float(consts["b_grad"])
    a_r, b_r = float(consts["a_r"]), float(consts["b_r"])
    p_sup = float(consts.get("p_sup", 0.0))
    if not b_r < 1.0:
        raise AssumptionError(f"theorem inapplicable: need b_r < 1, got {b_r}")

    grid = np.asarray(knob_grid, dtype=float)
    best = None  # (|lam0|, gamma, record)
    best_fail = None  # (gamma, record) at the largest lambda scanned
    lam_max = 10.0 ** LAMBDA_EXPONENTS[-1]
    for nu in grid:
        nu_factor = 1.0 + 1.0 / (4.0 * nu)
        for beta in grid:
            b = max(beta * nu_factor, b_r * (1.0 + nu))
            if b >= 1.0:
                continue
            a = p_sup**4 / (4.0 * beta) * nu_factor + a_r * (1.0 + nu)
            for alpha in grid:
                if alpha >= 1.0 or b / (1.0 - alpha) >= 1.0:
                    continue
                eps_adm = grid if b_grad == 0.0 else grid[grid * b_grad <= alpha]
                if eps_adm.size == 0:
                    continue
                # largest admissible grid delta for each eps minimizes C_alpha
                delta_cap = alpha * eps_adm
                pos = np.searchsorted(grid, delta_cap * (1 + 1e-15), side="right") - 1
                ok = pos >= 0
                if not np.any(ok):
                    continue
                eps_adm, pos = eps_adm[ok], pos[ok]
                delta = grid[pos]
                c_alpha = eps_adm * a_grad + 1.0 / (4.0 * eps_adm * delta)
                num = a + b * c_alpha / (1.0 - alpha)
                den = 1.0 - b / (1.0 - alpha)
                needed = np.sqrt(num / den)
                exps = np.ceil(np.log10(np.maximum(needed, 1.0)))
                # strict inequality: bump when 10^k equals the threshold exactly
                exps = np.where(10.0**exps <= needed, exps + 1, exps)
                for i in range(eps_adm.size):
                    k = exps[i]
                    if k > LAMBDA_EXPONENTS[-1]:
                        # gamma stays >= 1 on the whole lambda scan; remember the best miss
                        gamma_at_max = float(np.sqrt(num[i] / lam_max**2 + b / (1.0 - alpha)))
                        if best_fail is None or gamma_at_max < best_fail[0]:
                            best_fail = (
                                gamma_at_max,
                                dict(nu=nu, beta=beta, alpha=alpha, eps=eps_adm[i], delta=delta[i],
                                     a=a, b=b, c_alpha=c_alpha[i], lambda0=-lam_max,
                                     gamma=gamma_at_max),
                            )
                        continue
                    lam0 = 10.0**k
                    gamma = float(np.sqrt(num[i] / lam0**2 + b / (1.0 - alpha)))
                    key = (lam0, gamma, nu, beta, alpha, eps_adm[i])
                    if gamma < 1.0 and (best is None or key < best[0]):
                        best = (
                            key,
                            dict(nu=nu, beta=beta, alpha=alpha, eps=eps_adm[i], delta=delta[i],
                                 a=a, b=b, c_alpha=c_alpha[i], lambda0=-lam0, gamma=gamma),
                        )
    base = {"a_grad": a_grad, "b_grad": b_grad, "a_r": a_r, "b_r": b_r, "p_sup": p_sup}
    if best is not None:
        record = best[1]
        return HypothesisReport(
            theorem="Schrodinger",
            lam=complex(record["lambda0"]),
            constants={**base, **record},
            per_size={},
            verdict=Verdict.PASS,
        )
    record = best_fail[1] if best_fail else {}
    return HypothesisReport(
        theorem="Schrodinger",
        lam=None,
        constants={**base, **record},
        per_size={},
        verdict=Verdict.FAIL,
        notes="no knob combination reached gamma < 1 within the lambda_0 scan",
    )


def banded_case_report(profile: BandProfile) -> HypothesisReport:
    """File a band profile's case hint as theorem evidence (BandedCase)."""
    constants = {
        "max_row_count": profile.max_row_count,
        "max_col_count": profile.max_col_count,
        "row_partial_sum": float(profile.row_partial_sums[-1]),
        "col_partial_sum": float(profile.col_partial_sums[-1]),
        "hint": profile.hint,
        "envelope_bounded": profile.envelope_bounded,
    }
    return HypothesisReport(
        theorem="BandedCase",
        lam=profile.lam,
        constants=constants,
        per_size={
            "row_counts": profile.row_counts,
            "col_counts": profile.col_counts,
            "row_envelope": profile.row_envelope,
            "col_envelope": profile.col_envelope,
        },
        verdict=Verdict.PASS if profile.hint != "none" else Verdict.FAIL,
        notes=f"case hint '{profile.hint}' over scan limit {profile.scan_limit}; "
        "trend evidence only",
    )
