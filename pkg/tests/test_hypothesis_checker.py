"""Sufficient-condition checkers: relative bounds, decay profiles, constant pipelines."""

import numpy as np
import pytest

from specexact import discretize as dz, hypothesis_checker as hc, numerics, operator_model as om
from specexact.errors import AssumptionError, PoleError
from specexact.hypothesis_checker import Verdict

ZERO = lambda x: 0.0
ONE = lambda x: 1.0


def brute_force_opnorm(mat, rng, probes=1000, refine_iters=300):
    """Independent sigma_max oracle: random unit probes plus Gram power iteration."""
    mat = np.asarray(mat)
    n = mat.shape[1]
    best_val, best_vec = -1.0, None
    sigma = numerics.op_norm(mat)
    for _ in range(probes):
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        x /= np.linalg.norm(x)
        val = np.linalg.norm(mat @ x)
        assert val <= sigma + 1e-10  # sigma_max dominates every probe
        if val > best_val:
            best_val, best_vec = val, x
    x = best_vec
    for _ in range(refine_iters):
        y = mat.conj().T @ (mat @ x)
        x = y / np.linalg.norm(y)
    return np.linalg.norm(mat @ x)


class TestRelativeBound:
    def jacobi_sections(self, sizes):
        split = om.split_blocks(om.jacobi_spec(), range(2, max(sizes) + 2, 2))
        return (
            [split.diag_section(k) for k in sizes],
            [split.coupling_section(k) for k in sizes],
        )

    def test_jacobi_gamma_half(self):
        sizes = list(range(2, 82, 2))
        t_secs, s_secs = self.jacobi_sections(sizes)
        rep = hc.relative_bound(t_secs, s_secs, 0.0, sizes)
        assert rep.verdict is Verdict.PASS
        assert rep.constants["gamma_sup"] <= 0.5 + 1e-6
        gam = rep.per_size["gamma"]
        assert gam[0] == 0.0
        np.testing.assert_allclose(gam[1:], 0.5, atol=1e-10)

    def test_zero_perturbation(self):
        t = [np.eye(3) * 2.0] * 4
        s = [np.zeros((3, 3))] * 4
        rep = hc.relative_bound(t, s, 0.0)
        assert rep.constants["gamma_sup"] == 0.0
        assert rep.verdict is Verdict.PASS

    def test_identity_scalar(self):
        # S = T = I at lam = -1: gamma = ||I (I + 1)^{-1}|| = 1/2
        t = [np.eye(4)] * 3
        rep = hc.relative_bound(t, t, -1.0)
        np.testing.assert_allclose(rep.per_size["gamma"], 0.5, atol=1e-12)

    def test_scaling_covariance(self):
        rng = np.random.default_rng(1)
        t = [rng.standard_normal((5, 5)) + 3 * np.eye(5) for _ in range(3)]
        s = [rng.standard_normal((5, 5)) for _ in range(3)]
        base = hc.relative_bound(t, s, 0.5).per_size["gamma"]
        scaled = hc.relative_bound(t, [2.5 * m for m in s], 0.5).per_size["gamma"]
        np.testing.assert_allclose(scaled, 2.5 * base, rtol=1e-12)

    def test_pole_error_names_size(self):
        t = [np.diag([0.0, 1.0])]
        with pytest.raises(PoleError) as exc:
            hc.relative_bound(t, t, 0.0, sizes=[7])
        assert exc.value.index == 7

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(12)
        for _ in range(5):
            n = int(rng.integers(3, 21))
            t = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) + 4 * np.eye(n)
            s = rng.standard_normal((n, n))
            rep = hc.relative_bound([t], [s], 0.0)
            target = s @ np.linalg.inv(t)
            target /= numerics.op_norm(target)  # normalize so the 1e-6 bound is scale-free
            oracle = brute_force_opnorm(target, rng)
            assert abs(1.0 - oracle) <= 1e-6

    def test_neumann_consequence(self):
        sizes = list(range(2, 42, 2))
        t_secs, s_secs = self.jacobi_sections(sizes)
        rep = hc.relative_bound(t_secs, s_secs, 0.0, sizes)
        for t, s, g in zip(t_secs, s_secs, rep.per_size["gamma"]):
            assert g < 1
            assert numerics.sigma_min(t + s) >= (1 - g) * numerics.sigma_min(t) - 1e-10


class TestGammaProduct2x2:
    def test_zero_couplings(self):
        eye = [np.eye(3)] * 3
        zero = [np.zeros((3, 3))] * 3
        rep = hc.gamma_product_2x2(eye, zero, zero, eye, -1.0)
        assert rep.constants["product"] == 0.0
        assert rep.verdict is Verdict.PASS

    def test_scalar_identity_sections(self):
        c = 0.8
        eye = [np.eye(4)] * 3
        coup = [c * np.eye(4)] * 3
        rep = hc.gamma_product_2x2(eye, coup, coup, eye, -1.0)
        assert rep.constants["gamma_ac"] == pytest.approx(c / 2, abs=1e-12)
        assert rep.constants["product"] == pytest.approx(c * c / 4, abs=1e-12)

    def test_sl_demo_product_below_one(self):
        # u = s = 0.5, gamma1 = gamma2 = 1, t = v = 0; lambda0 from the search
        search = hc.sl_lambda0_search(1.0, 1.0, 0.5, 0.0, 0.5, 0.0)
        assert search.verdict is Verdict.PASS
        lam0 = search.lam
        prob = dz.SLProblem("lap", ONE, ZERO, 0.0, np.pi, 0.0, (0.1,), 1.0, 0.0)
        t1 = [dz.sl_assemble(prob, 1, m).data for m in (40, 80, 120)]
        a_secs = [1.0 * t for t in t1]
        d_secs = [1.0 * t for t in t1]
        b_secs = [0.5 * t for t in t1]
        c_secs = [0.5 * t for t in t1]
        rep = hc.gamma_product_2x2(a_secs, b_secs, c_secs, d_secs, lam0)
        assert rep.verdict is Verdict.PASS
        # oracle: by selfadjointness the norm is max_k |0.5 theta_k / (theta_k - lam0)|
        for t, got in zip(t1, rep.per_size["gamma_ac"]):
            theta = np.linalg.eigvalsh(t)
            want = np.max(0.5 * np.abs(theta) / np.abs(theta - lam0))
            assert got == pytest.approx(want, rel=1e-8)
        # and the proof-side bound dominates the computed sups
        assert rep.constants["gamma_ac"] <= search.constants["gamma_bound_1"] + 1e-12


class TestUniformDecay:
    def test_jacobi_blocks_exact(self):
        blocks = [np.array([[0.0, 2.0 * n], [2.0 * n, 0.0]]) for n in range(1, 101)]
        rep = hc.uniform_resolvent_decay(blocks, 0.0, tag="Galerkin")
        np.testing.assert_allclose(rep.per_size["d"], 1.0 / (2.0 * np.arange(1, 101)), atol=1e-12)
        assert rep.verdict is Verdict.PASS

    def test_constant_blocks_fail(self):
        rep = hc.uniform_resolvent_decay([np.array([[1.0]])] * 30, 0.0)
        np.testing.assert_array_equal(rep.per_size["d"], 1.0)
        assert rep.verdict is Verdict.FAIL

    def test_cubic_scalar_blocks(self):
        lam = 50j
        blocks = [np.array([[float(j**3)]]) for j in range(1, 41)]
        rep = hc.uniform_resolvent_decay(blocks, lam)
        js = np.arange(1, 41)
        np.testing.assert_allclose(rep.per_size["d"], 1.0 / np.abs(js**3 - lam), rtol=1e-12)
        assert rep.verdict is Verdict.PASS

    def test_inner_sup_over_n(self):
        # family B_j^{(n)}: sup over n picked per j
        fam = [[np.array([[2.0 * j]]), np.array([[1.0 * j]])] for j in range(1, 31)]
        rep = hc.uniform_resolvent_decay(fam, 0.0)
        np.testing.assert_allclose(rep.per_size["d"], 1.0 / np.arange(1, 31), rtol=1e-12)

    def test_pole(self):
        with pytest.raises(PoleError):
            hc.uniform_resolvent_decay([np.array([[0.0]])], 0.0)


class TestSLCoercivity:
    def test_beta_zero(self):
        assert hc.sl_coercivity(1.0, 5.0, 0.0) == 5.0

    def test_beta_half_pi(self):
        assert hc.sl_coercivity(2.0, 3.0, np.pi / 2) == 3.0

    def test_beta_quarter_pi(self):
        assert hc.sl_coercivity(1.0, 0.0, np.pi / 4) == pytest.approx(-2.0, abs=1e-12)

    def test_constant_on_upper_range(self):
        for beta in np.linspace(np.pi / 2, np.pi - 1e-6, 7):
            assert hc.sl_coercivity(1.0, 1.5, beta) == 1.5

    def test_continuous_on_lower_range(self):
        betas = np.linspace(0, np.pi / 2 - 1e-3, 50)
        vals = [hc.sl_coercivity(1.0, 0.0, b) for b in betas]
        assert all(v2 <= v1 for v1, v2 in zip(vals, vals[1:]))  # decreasing in beta

    def test_validation(self):
        with pytest.raises(ValueError):
            hc.sl_coercivity(0.0, 1.0, 0.1)
        with pytest.raises(ValueError):
            hc.sl_coercivity(1.0, 1.0, np.pi)


class TestSLLambda0Search:
    def test_zero_couplings_first_candidate(self):
        rep = hc.sl_lambda0_search(1.0, 2.0, 0.0, 0.0, 0.0, 0.0)
        assert rep.verdict is Verdict.PASS
        assert rep.constants["eps"] == hc.EPS_GRID[0]
        assert rep.constants["product"] == 0.0

    def test_perpendicular_lines_force_sqrt2(self):
        rep = hc.sl_lambda0_search(1.0, 1j, 0.0, 0.0, 0.0, 0.0)
        assert rep.verdict is Verdict.PASS
        # independent oracle: dense maximization of |xi| / |xi - lam0| over the real line
        lam0 = rep.lam
        ts = np.linspace(-40 * abs(lam0), 40 * abs(lam0), 400_001)
        oracle = np.max(np.abs(ts) / np.abs(ts - lam0))
        assert rep.constants["sup_ratio_1"] == pytest.approx(max(oracle, 1.0), rel=1e-4)
        assert oracle == pytest.approx(np.sqrt(2.0), rel=1e-3)
        assert 1.0 + rep.constants["eps"] >= oracle - 1e-3

    def test_coincident_lines(self):
        rep = hc.sl_lambda0_search(1.0, 1.0, 0.5, 0.0, 0.5, 0.0)
        assert rep.verdict is Verdict.PASS
        lam0 = rep.lam
        # bisector is the perpendicular: lam0 purely imaginary, dist = |lam0| >= 1/eps
        assert abs(lam0.real) <= 1e-9 * abs(lam0)
        assert rep.constants["dist_1"] >= 1.0 / rep.constants["eps"]
        # small eps admissible too: check the inequalities directly at eps = 0.01
        eps = 0.01
        lam_small = (np.sqrt(2) / eps) * 1j
        ts = np.linspace(-10 * abs(lam_small), 10 * abs(lam_small), 100_001)
        sup = max(np.max(np.abs(ts) / np.abs(ts - lam_small)), 1.0)
        assert sup <= 1 + eps
        assert abs(lam_small.imag) >= 1 / eps

    def test_self_audit(self):
        rep = hc.sl_lambda0_search(2.0, 1j, 0.3, 0.1, 0.4, 0.2)
        if rep.verdict is Verdict.PASS:
            c = rep.constants
            assert c["sup_ratio_1"] <= 1 + c["eps"] and c["sup_ratio_2"] <= 1 + c["eps"]
            assert c["dist_1"] >= 1 / c["eps"] and c["dist_2"] >= 1 / c["eps"]
            assert c["product"] < 1

    def test_precondition(self):
        with pytest.raises(AssumptionError):
            hc.sl_lambda0_search(1.0, 1.0, 1.0, 0.0, 1.0, 0.0)


class TestSchrodingerConstants:
    def test_constant_potential(self):
        rep = hc.schrodinger_constants(
            {"a_grad": 0.0, "b_grad": 0.0, "a_r": 0.0, "b_r": 0.0, "p_sup": 0.0}
        )
        assert rep.verdict is Verdict.PASS
        c = rep.constants
        # pipeline re-evaluation oracle at the returned knobs
        nu_factor = 1 + 1 / (4 * c["nu"])
        b = max(c["beta"] * nu_factor, c["b_r"] * (1 + c["nu"]))
        a = c["p_sup"] ** 4 / (4 * c["beta"]) * nu_factor + c["a_r"] * (1 + c["nu"])
        c_alpha = c["eps"] * c["a_grad"] + 1 / (4 * c["eps"] * c["delta"])
        gamma = np.sqrt((a + b * c_alpha / (1 - c["alpha"])) / c["lambda0"] ** 2 + b / (1 - c["alpha"]))
        assert gamma == pytest.approx(c["gamma"], rel=1e-12)
        assert gamma < 1
        assert max(c["delta"] / c["eps"], c["eps"] * c["b_grad"]) <= c["alpha"] + 1e-15
        assert b < 1 and b / (1 - c["alpha"]) < 1

    def test_oscillator_fitted(self):
        sp = dz.SchrodingerProblem("osc", p=ZERO, q=lambda x: x * x, r=ZERO, L_n=(20.0,))
        rep = hc.schrodinger_constants(sp)
        assert rep.verdict is Verdict.PASS
        c = rep.constants
        nu_factor = 1 + 1 / (4 * c["nu"])
        b = max(c["beta"] * nu_factor, c["b_r"] * (1 + c["nu"]))
        a = c["p_sup"] ** 4 / (4 * c["beta"]) * nu_factor + c["a_r"] * (1 + c["nu"])
        c_alpha = c["eps"] * c["a_grad"] + 1 / (4 * c["eps"] * c["delta"])
        gamma = np.sqrt((a + b * c_alpha / (1 - c["alpha"])) / c["lambda0"] ** 2 + b / (1 - c["alpha"]))
        assert gamma == pytest.approx(c["gamma"], rel=1e-12) and gamma < 1

    def test_b_r_one_rejected(self):
        with pytest.raises(AssumptionError):
            hc.schrodinger_constants({"a_grad": 0.0, "b_grad": 0.0, "a_r": 0.0, "b_r": 1.0, "p_sup": 0.0})


class TestBandedCaseReport:
    def test_upper_triangular_case_c(self):
        profile = om.band_profile(om.upper_triangular_spec(), 200, lam=50j, normalize_by_diag=True)
        rep = hc.banded_case_report(profile)
        assert rep.verdict is Verdict.PASS
        assert rep.constants["hint"] == "c"

    def test_report_serializes(self):
        import json

        profile = om.band_profile(om.jacobi_spec(), 30)
        rep = hc.banded_case_report(profile)
        json.dumps(rep.to_dict())
