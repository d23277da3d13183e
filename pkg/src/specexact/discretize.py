"""Finite-difference assembly of truncated singular differential problems.

Two families: Sturm-Liouville expressions -(p f')' + q f on (a, b) with a
Robin condition at the regular endpoint b and a Dirichlet cut at a_n > a
(scalar and 2x2 operator-matrix form), and 1D Schrodinger expressions
-f'' + p f' + v f on (-L_n, L_n) with Dirichlet ends and complex potential
v = q + r.  Second-order schemes throughout: conservative staggered fluxes
for -(p f')', central differences for the first-order term.  The singular
endpoint a is never sampled; the scheme only ever sees the regular
truncated problem.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import AssumptionError, CoefficientError
from .operator_model import Provenance, SectionMatrix

#: fraction of audit nodes allowed to violate a declared assumption constant
AUDIT_VIOLATION_BUDGET = 1e-3
AUDIT_POINTS = 10_000


def _sample(f: Callable, xs: np.ndarray) -> np.ndarray:
    return np.asarray([f(float(x)) for x in xs])


def _sample_real(f: Callable, xs: np.ndarray, what: str) -> np.ndarray:
    vals = _sample(f, xs)
    if np.iscomplexobj(vals):
        if np.any(vals.imag != 0):
            raise CoefficientError(f"{what} must be real-valued")
        vals = vals.real
    return vals.astype(float)


# ------------------------------ Sturm-Liouville -------------------------------


@dataclass(frozen=True)
class SLProblem:
    """Singular Sturm-Liouville problem with a truncation ladder a_n -> a.

    The boundary condition at b is f(b) cos(beta) - (p f')(b) sin(beta) = 0;
    beta = 0 is Dirichlet, beta = pi/2 is Neumann.  For beta != 0 the flux
    coefficient p must be evaluable up to b + h/2 (ghost cell).
    """

    name: str
    p: Callable[[float], float]
    q: Callable[[float], float]
    a: float
    b: float
    beta: float
    a_n: tuple[float, ...]
    p_min: float
    q_min: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"need a < b, got ({self.a}, {self.b})")
        if not (0.0 <= self.beta < np.pi):
            raise ValueError(f"beta must lie in [0, pi), got {self.beta}")
        if self.p_min <= 0:
            raise CoefficientError(f"p_min must be positive, got {self.p_min}")
        pts = tuple(float(x) for x in self.a_n)
        if not pts:
            raise ValueError("need at least one truncation point")
        if any(x2 >= x1 for x1, x2 in zip(pts, pts[1:])):
            raise ValueError("truncation points a_n must be strictly decreasing")
        # a_n == a is the regular case (truncation trivial); a_n < a is never valid
        if pts[0] >= self.b or pts[-1] < self.a:
            raise ValueError("truncation points must lie in [a, b)")
        object.__setattr__(self, "a_n", pts)

    @property
    def ladder_length(self) -> int:
        return len(self.a_n)

    def unknowns(self, m: int) -> int:
        return m - 1 if self.beta == 0.0 else m


def _validate_sl_coefficients(prob: SLProblem, p_vals, q_vals):
    slack_p = 1e-12 * (1.0 + abs(prob.p_min))
    slack_q = 1e-12 * (1.0 + abs(prob.q_min))
    if np.any(p_vals <= 0):
        x_bad = np.argmin(p_vals)
        raise CoefficientError(f"p sampled non-positive (min {p_vals.min():.3e})")
    if np.any(p_vals < prob.p_min - slack_p):
        raise CoefficientError(
            f"p drops below the declared p_min = {prob.p_min} (min {p_vals.min():.6g})"
        )
    if np.any(q_vals < prob.q_min - slack_q):
        raise CoefficientError(
            f"q drops below the declared q_min = {prob.q_min} (min {q_vals.min():.6g})"
        )


def sl_assemble(prob: SLProblem, n: int, m: int) -> SectionMatrix:
    """Stiffness matrix of the truncated problem on (a_n, b) with m grid cells.

    Grid x_i = a_n + i h, h = (b - a_n)/m.  Interior rows use the conservative
    scheme -[p_{i+1/2}(f_{i+1}-f_i) - p_{i-1/2}(f_i-f_{i-1})]/h^2 + q_i f_i.
    Dirichlet at a_n eliminates f_0; beta = 0 eliminates f_m as well, else the
    ghost value f_{m+1} = f_{m-1} + (2 h cot(beta) / p(b)) f_m closes row m.
    """
    if m < 2:
        raise ValueError(f"need at least 2 grid cells, got {m}")
    if not 1 <= n <= len(prob.a_n):
        raise ValueError(f"truncation index {n} outside 1..{len(prob.a_n)}")
    an = prob.a_n[n - 1]
    h = (prob.b - an) / m
    k = prob.unknowns(m)
    nodes = an + h * np.arange(1, k + 1)
    stag = an + h * (np.arange(0, k + 1) + 0.5)  # x_{1/2} .. x_{k+1/2}
    p_stag = _sample_real(prob.p, stag, "p")
    q_nodes = _sample_real(prob.q, nodes, "q")
    _validate_sl_coefficients(prob, p_stag, q_nodes)

    mat = np.zeros((k, k))
    inv_h2 = 1.0 / (h * h)
    for i in range(k):  # 0-based row for node x_{i+1}
        pl, pr = p_stag[i], p_stag[i + 1]
        mat[i, i] = (pl + pr) * inv_h2 + q_nodes[i]
        if i > 0:
            mat[i, i - 1] = -pl * inv_h2
        if i < k - 1:
            mat[i, i + 1] = -pr * inv_h2
    if prob.beta != 0.0:
        # ghost elimination at b, last interior row overwritten
        pl, pr = p_stag[k - 1], p_stag[k]
        pb = float(prob.p(prob.b))
        if pb <= 0:
            raise CoefficientError(f"p(b) must be positive, got {pb}")
        c = 2.0 * h / (np.tan(prob.beta) * pb)
        mat[k - 1, k - 2] = -(pl + pr) * inv_h2
        mat[k - 1, k - 1] = (pl + pr * (1.0 - c)) * inv_h2 + q_nodes[k - 1]
    return SectionMatrix(
        data=mat,
        provenance=Provenance(
            name=prob.name, scheme="interval_truncation", size=n, grid=(an, prob.b, m)
        ),
    )


def symmetrize_scaling(mat: np.ndarray) -> np.ndarray:
    """Diagonal d with diag(d) M diag(1/d) symmetric, for tridiagonal real M.

    Requires positive products M[i, i+1] * M[i+1, i] on the coupled band.
    """
    n = mat.shape[0]
    d = np.ones(n)
    for i in range(n - 1):
        up, lo = mat[i, i + 1], mat[i + 1, i]
        if up == 0.0 and lo == 0.0:
            continue
        if up * lo <= 0.0:
            raise ValueError(f"pair ({i}, {i + 1}) not symmetrizable: product {up * lo}")
        d[i + 1] = d[i] * np.sqrt(up / lo)
    return d


@dataclass(frozen=True)
class SLMatrixProblem:
    """2x2 operator matrix [[g1 T1, s T2 + t], [u T1 + v, g2 T2]] on one interval.

    Couplings s, t, u, v are bounded multipliers with declared sup norms;
    the declared norms must satisfy |s| |u| < |g1| |g2|.
    """

    name: str
    tau1: SLProblem
    tau2: SLProblem
    gamma1: complex
    gamma2: complex
    s: Callable[[float], complex]
    t: Callable[[float], complex]
    u: Callable[[float], complex]
    v: Callable[[float], complex]
    sup_s: float
    sup_t: float
    sup_u: float
    sup_v: float

    def __post_init__(self):
        if self.gamma1 == 0 or self.gamma2 == 0:
            raise ValueError("gamma1, gamma2 must be nonzero")
        if not self.sup_s * self.sup_u < abs(self.gamma1) * abs(self.gamma2):
            raise AssumptionError(
                f"need |s| |u| < |gamma1| |gamma2|: {self.sup_s * self.sup_u} >= "
                f"{abs(self.gamma1) * abs(self.gamma2)}"
            )
        if (self.tau1.a, self.tau1.b, self.tau1.a_n) != (self.tau2.a, self.tau2.b, self.tau2.a_n):
            raise ValueError("components must share the interval and truncation ladder")

    @property
    def ladder_length(self) -> int:
        return self.tau1.ladder_length


def sl_block_assemble(prob: SLMatrixProblem, n: int, m: int) -> SectionMatrix:
    """2K x 2K section with blocks [g1 T1, diag(s) T2 + diag(t); diag(u) T1 + diag(v), g2 T2]."""
    k1 = prob.tau1.unknowns(m)
    k2 = prob.tau2.unknowns(m)
    if k1 != k2:
        raise ValueError(
            f"component grids mismatch: {k1} vs {k2} interior unknowns (check the betas)"
        )
    t1 = sl_assemble(prob.tau1, n, m).data
    t2 = sl_assemble(prob.tau2, n, m).data
    an = prob.tau1.a_n[n - 1]
    h = (prob.tau1.b - an) / m
    nodes = an + h * np.arange(1, k1 + 1)
    sd = np.diag(_sample(prob.s, nodes))
    td = np.diag(_sample(prob.t, nodes))
    ud = np.diag(_sample(prob.u, nodes))
    vd = np.diag(_sample(prob.v, nodes))
    top = np.hstack([prob.gamma1 * t1, sd @ t2 + td])
    bottom = np.hstack([ud @ t1 + vd, prob.gamma2 * t2])
    mat = np.vstack([top, bottom])
    if np.iscomplexobj(mat) and np.all(mat.imag == 0.0):
        mat = mat.real.copy()
    return SectionMatrix(
        data=mat,
        provenance=Provenance(
            name=prob.name, scheme="interval_truncation_2x2", size=n, grid=(an, prob.tau1.b, m)
        ),
    )


# -------------------------------- Schrodinger ----------------------------------


def _cover_fit(y: np.ndarray, z: np.ndarray) -> tuple[float, float]:
    """Least-squares fit of y <= a + b z, shifted so every sample is covered."""
    design = np.column_stack([np.ones_like(z), z])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    b = max(float(coef[1]), 0.0)
    a = max(float(np.max(y - b * z)), 0.0)
    return a, b


@dataclass(eq=False)
class SchrodingerProblem:
    """1D expression -f'' + p f' + v f, v = q + r, truncated to (-L_n, L_n).

    q carries the growth (|q| -> infinity, Re q >= 0), r the rough part.
    The gradient and remainder bounds |q'|^2 <= a_grad + b_grad |q|^2 and
    |r|^2 <= a_r + b_r |q|^2 (b_r < 1) are declared or fitted by sampling
    on a uniform audit grid over the largest truncation interval.
    """

    name: str
    p: Callable[[float], complex]
    q: Callable[[float], complex]
    r: Callable[[float], complex]
    L_n: tuple[float, ...]
    a_grad: float | None = None
    b_grad: float | None = None
    a_r: float | None = None
    b_r: float | None = None
    _resolved: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        pts = tuple(float(x) for x in self.L_n)
        if not pts or any(x <= 0 for x in pts):
            raise ValueError("truncation half-widths L_n must be positive")
        if any(x2 <= x1 for x1, x2 in zip(pts, pts[1:])):
            raise ValueError("truncation half-widths L_n must be strictly increasing")
        self.L_n = pts
        if self.b_r is not None and not self.b_r < 1.0:
            raise AssumptionError(f"need b_r < 1, declared b_r = {self.b_r}")

    @property
    def ladder_length(self) -> int:
        return len(self.L_n)

    def _audit_grid(self, half_width: float) -> np.ndarray:
        return np.linspace(-half_width, half_width, AUDIT_POINTS)

    def assumption_constants(self) -> dict:
        """Resolved (a_grad, b_grad, a_r, b_r, p_sup): declared where given, fitted otherwise."""
        if self._resolved:
            return dict(self._resolved)
        xs = self._audit_grid(self.L_n[-1])
        qv = _sample(self.q, xs).astype(complex)
        if np.any(qv.real < -1e-12 * (1.0 + np.abs(qv))):
            bad = int(np.argmin(qv.real))
            raise AssumptionError(f"Re q must be >= 0; violated at x = {xs[bad]:.6g}", location=float(xs[bad]))
        rv = _sample(self.r, xs).astype(complex)
        pv = _sample(self.p, xs).astype(complex)
        dq = np.gradient(qv, xs)
        q2 = np.abs(qv) ** 2
        out = {}
        if self.a_grad is None or self.b_grad is None:
            out["a_grad"], out["b_grad"] = _cover_fit(np.abs(dq) ** 2, q2)
        else:
            out["a_grad"], out["b_grad"] = float(self.a_grad), float(self.b_grad)
        if self.a_r is None or self.b_r is None:
            out["a_r"], out["b_r"] = _cover_fit(np.abs(rv) ** 2, q2)
            if not out["b_r"] < 1.0:
                raise AssumptionError(f"fitted b_r = {out['b_r']:.6g} is not < 1")
        else:
            out["a_r"], out["b_r"] = float(self.a_r), float(self.b_r)
        out["p_sup"] = float(np.max(np.abs(pv)))
        out["fitted_grad"] = self.a_grad is None or self.b_grad is None
        out["fitted_r"] = self.a_r is None or self.b_r is None
        self._resolved.update(out)
        return dict(out)

    def audit(self, n: int) -> None:
        """Check the resolved constants on the audit grid over Omega_n.

        Raises :class:`AssumptionError` with the worst offender location when
        more than 0.1% of the nodes violate either inequality.
        """
        consts = self.assumption_constants()
        xs = self._audit_grid(self.L_n[n - 1])
        qv = _sample(self.q, xs).astype(complex)
        rv = _sample(self.r, xs).astype(complex)
        dq = np.gradient(qv, xs)
        q2 = np.abs(qv) ** 2
        slack = 1e-9 * (1.0 + q2)
        for label, lhs, a, b in (
            ("|q'|^2 <= a_grad + b_grad |q|^2", np.abs(dq) ** 2, consts["a_grad"], consts["b_grad"]),
            ("|r|^2 <= a_r + b_r |q|^2", np.abs(rv) ** 2, consts["a_r"], consts["b_r"]),
        ):
            excess = lhs - (a + b * q2) - slack
            bad = excess > 0
            if np.count_nonzero(bad) > AUDIT_VIOLATION_BUDGET * xs.size:
                worst = int(np.argmax(excess))
                raise AssumptionError(
                    f"assumption {label} violated at {np.count_nonzero(bad)} of {xs.size} "
                    f"audit nodes; worst at x = {xs[worst]:.6g}",
                    location=float(xs[worst]),
                )

    def adjoint(self) -> "SchrodingerProblem":
        """Coefficients of the formal adjoint: p -> -conj(p), q -> conj(q), r -> conj(r)."""
        p, q, r = self.p, self.q, self.r
        return SchrodingerProblem(
            name=f"{self.name}*",
            p=lambda x: -np.conj(p(x)),
            q=lambda x: np.conj(q(x)),
            r=lambda x: np.conj(r(x)),
            L_n=self.L_n,
            a_grad=self.a_grad,
            b_grad=self.b_grad,
            a_r=self.a_r,
            b_r=self.b_r,
        )


def schrodinger_assemble(prob: SchrodingerProblem, n: int, m: int) -> SectionMatrix:
    """Dirichlet section of -f'' + p f' + v f on (-L_n, L_n) with m grid cells.

    Central differences: -(f_{i+1} - 2 f_i + f_{i-1})/h^2
    + p_i (f_{i+1} - f_{i-1})/(2h) + v_i f_i.
    """
    if m < 4:
        raise ValueError(f"need at least 4 grid cells, got {m}")
    if not 1 <= n <= len(prob.L_n):
        raise ValueError(f"truncation index {n} outside 1..{len(prob.L_n)}")
    prob.audit(n)
    half = prob.L_n[n - 1]
    h = 2.0 * half / m
    k = m - 1
    nodes = -half + h * np.arange(1, k + 1)
    pv = _sample(prob.p, nodes).astype(complex)
    vv = _sample(prob.q, nodes).astype(complex) + _sample(prob.r, nodes).astype(complex)
    inv_h2 = 1.0 / (h * h)
    mat = np.zeros((k, k), dtype=complex)
    idx = np.arange(k)
    mat[idx, idx] = 2.0 * inv_h2 + vv
    mat[idx[:-1], idx[:-1] + 1] = -inv_h2 + pv[:-1] / (2.0 * h)
    mat[idx[1:], idx[1:] - 1] = -inv_h2 - pv[1:] / (2.0 * h)
    if np.all(mat.imag == 0.0):
        mat = mat.real.copy()
    return SectionMatrix(
        data=mat,
        provenance=Provenance(
            name=prob.name, scheme="domain_truncation", size=n, grid=(-half, half, m)
        ),
    )
