"""Resolvent norms, pseudospectra, region probes and contour projections."""

import io

import numpy as np
import pytest

from specexact import numerics, operator_model as om, resolvent_analysis as ra
from specexact.errors import ContourError
from specexact.resolvent_analysis import ProbeVerdict


def closed_form_sigma_min_2x2_triangular(a, b):
    """Smallest singular value of [[a, b], [0, a]]: stable form via det/sigma_max."""
    t = 2 * abs(a) ** 2 + b**2
    disc = np.sqrt(t**2 - 4 * abs(a) ** 4)
    sigma_max = np.sqrt((t + disc) / 2)
    return abs(a) ** 2 / sigma_max


class TestResolventNorm:
    def test_normal_distance(self):
        assert ra.resolvent_norm(np.diag([0.0, 1.0]), 0.5) == pytest.approx(2.0, abs=1e-12)

    def test_identity(self):
        assert ra.resolvent_norm(np.eye(4), 3.0) == pytest.approx(0.5, abs=1e-14)

    def test_antidiagonal(self):
        assert ra.resolvent_norm([[0.0, 2.0], [2.0, 0.0]], 0.0) == pytest.approx(0.5, abs=1e-14)

    def test_infinite_on_exact_eigenvalue_of_diagonal(self):
        assert ra.resolvent_norm(np.diag([2.0, 3.0]), 2.0) == np.inf

    def test_lower_bound_vs_spectrum(self):
        rng = np.random.default_rng(2)
        for _ in range(25):
            n = int(rng.integers(2, 12))
            m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            w = numerics.eig_dense(m).eigenvalues
            z = complex(rng.standard_normal(), rng.standard_normal())
            dist = np.min(np.abs(w - z))
            if dist == 0.0:
                continue
            assert ra.resolvent_norm(m, z) >= 1.0 / dist - 1e-10


class TestPseudospectrumGrid:
    def test_node_value(self):
        g = ra.pseudospectrum_grid(np.diag([0.0, 1.0]), (-1, 2, -1, 1), 7, 5)
        ix = int(np.argmin(np.abs(g.re_points - 0.5)))
        iy = int(np.argmin(np.abs(g.im_points)))
        assert g.values[iy, ix] == pytest.approx(2.0, abs=1e-12)

    def test_hermitian_normality_identity(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((6, 6))
        m = a + a.T
        w = np.linalg.eigvalsh(m)
        g = ra.pseudospectrum_grid(m, (-4, 4, -2, 2), 9, 7)
        for re, im, val in g.rows():
            want = 1.0 / np.min(np.abs(w - complex(re, im)))
            assert val == pytest.approx(want, rel=1e-8)

    def test_shifted_nilpotent_sanity(self):
        m = np.array([[0.0, 100.0], [0.0, 0.0]])
        g = ra.pseudospectrum_grid(m, (0.05, 0.15, -0.05, 0.05), 3, 3)
        ix = int(np.argmin(np.abs(g.re_points - 0.1)))
        iy = int(np.argmin(np.abs(g.im_points)))
        z = complex(g.re_points[ix], g.im_points[iy])
        want = 1.0 / closed_form_sigma_min_2x2_triangular(-z, 100.0)
        assert g.values[iy, ix] == pytest.approx(want, rel=1e-10)
        assert g.values[iy, ix] >= 1000.0

    def test_thread_count_does_not_change_values(self):
        m = np.diag([0.0, 1.0, 2.0])
        g1 = ra.pseudospectrum_grid(m, (-1, 3, -1, 1), 11, 9, threads=1)
        g4 = ra.pseudospectrum_grid(m, (-1, 3, -1, 1), 11, 9, threads=4)
        np.testing.assert_array_equal(g1.values, g4.values)

    def test_csv_format(self):
        g = ra.pseudospectrum_grid(np.diag([0.0, 1.0]), (0, 1, 0, 1), 2, 2)
        buf = io.StringIO()
        g.values[0, 0] = np.inf
        g.write_csv(buf)
        lines = buf.getvalue().strip().split("\n")
        assert lines[0] == "re,im,resnorm"
        assert len(lines) == 5
        assert lines[1].endswith(",inf")
        # every finite number round-trips
        for line in lines[2:]:
            for tok in line.split(","):
                float(tok)

    def test_degenerate_rect(self):
        with pytest.raises(ValueError):
            ra.pseudospectrum_grid(np.eye(2), (0, 0, 0, 1), 3, 3)


class TestRegionProbe:
    def test_jacobi_even_bounded(self):
        lad = ra.galerkin_ladder(om.jacobi_spec(), range(2, 42, 2))
        probe = ra.region_probe(lad, 0.0)
        assert probe.verdict is ProbeVerdict.BOUNDED
        assert probe.values.min() > 1.0

    def test_jacobi_odd_unbounded(self):
        lad = ra.galerkin_ladder(om.jacobi_spec(), range(3, 43, 2))
        probe = ra.region_probe(lad, 0.0)
        assert probe.verdict is ProbeVerdict.UNBOUNDED
        assert probe.values[-1] < 1e-10 * probe.scale

    def test_identity_constant(self):
        lad = ra.galerkin_ladder(om.identity_spec(), range(2, 16, 2))
        probe = ra.region_probe(lad, 2.0)
        assert probe.verdict is ProbeVerdict.BOUNDED
        np.testing.assert_allclose(probe.values, 1.0, atol=1e-14)

    def test_extension_preserves_verdict(self):
        spec = om.jacobi_spec()
        short = ra.region_probe(ra.galerkin_ladder(spec, range(2, 30, 2)), 0.0)
        longer = ra.region_probe(ra.galerkin_ladder(spec, range(2, 50, 2)), 0.0)
        assert short.verdict is longer.verdict is ProbeVerdict.BOUNDED
        short_odd = ra.region_probe(ra.galerkin_ladder(spec, range(3, 31, 2)), 0.0)
        longer_odd = ra.region_probe(ra.galerkin_ladder(spec, range(3, 51, 2)), 0.0)
        assert short_odd.verdict is longer_odd.verdict is ProbeVerdict.UNBOUNDED

    def test_short_ladder_rejected(self):
        with pytest.raises(ValueError):
            ra.region_probe(ra.galerkin_ladder(om.jacobi_spec(), (2, 4, 6)), 0.0)


class TestContourRank:
    def test_single_enclosed(self):
        assert ra.contour_rank(np.diag([0.0, 5.0]), 0.0, 1.0).rank == 1

    def test_jordan_block_multiplicity(self):
        assert ra.contour_rank([[0.0, 1.0], [0.0, 0.0]], 0.0, 1.0).rank == 2

    def test_two_of_three(self):
        assert ra.contour_rank(np.diag([0.1, 0.2, 5.0]), 0.0, 1.0).rank == 2

    def test_quadrature_refinement_invariance(self):
        m = np.array([[0.3, 1.0, 0.0], [0.0, 0.1, 2.0], [0.0, 0.0, 4.0]])
        r1 = ra.contour_rank(m, 0.2, 1.0, quadrature_points=32)
        r2 = ra.contour_rank(m, 0.2, 1.0, quadrature_points=64)
        assert r1.rank == r2.rank == 2
        # converged trapezoid: doubling changes projection entries negligibly
        assert np.abs(r1.projection - r2.projection).max() <= 1e-8

    def test_sum_rule(self):
        m = np.diag([0.0, 1.0, 5.0, 5.2])
        ranks = [
            ra.contour_rank(m, 0.5, 1.0).rank,
            ra.contour_rank(m, 5.1, 0.5).rank,
        ]
        assert sum(ranks) == 4

    def test_matches_eig_multiplicities_random(self):
        rng = np.random.default_rng(42)
        done = 0
        while done < 20:
            n = int(rng.integers(2, 13))
            m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            w = numerics.eig_dense(m).eigenvalues
            center = complex(rng.standard_normal(), rng.standard_normal())
            radius = float(rng.uniform(0.5, 2.0))
            if np.min(np.abs(np.abs(w - center) - radius)) < 0.1:
                continue
            rank = ra.contour_rank(m, center, radius).rank
            inside = int(np.count_nonzero(np.abs(w - center) < radius))
            assert rank == inside
            done += 1

    def test_eigenvalue_near_contour_raises(self):
        with pytest.raises(ContourError):
            ra.contour_rank(np.diag([1.0, 5.0]), 0.0, 1.0)

    def test_q_minimum(self):
        with pytest.raises(ValueError):
            ra.contour_rank(np.eye(2), 0.0, 0.5, quadrature_points=8)

    def test_banded_path_matches_dense(self):
        # tridiagonal of dimension >= 64 exercises the banded factorization
        rng = np.random.default_rng(9)
        n = 80
        main = rng.uniform(1.0, 2.0, n)
        off = rng.uniform(0.1, 0.3, n - 1)
        m = np.diag(main) + np.diag(off, 1) + np.diag(off, -1)
        w = np.linalg.eigvalsh(m)
        center = float(np.median(w))
        radius = 0.3
        if np.min(np.abs(np.abs(w - center) - radius)) < 0.02:
            center += 0.01
        rank = ra.contour_rank(m, center, radius).rank
        assert rank == int(np.count_nonzero(np.abs(w - center) < radius))


class TestNeumannBoundOnSections:
    """gamma < 1 forces sigma_min(T+S - lam) >= (1-gamma) sigma_min(T - lam)."""

    def test_jacobi_split(self):
        spec = om.jacobi_spec()
        split = om.split_blocks(spec, range(2, 42, 2))
        for k in range(4, 42, 4):
            t = split.diag_section(k)
            s = split.coupling_section(k)
            gamma = numerics.op_norm(s @ np.linalg.inv(t))
            assert gamma < 1
            lhs = numerics.sigma_min(t + s)
            rhs = (1 - gamma) * numerics.sigma_min(t)
            assert lhs >= rhs - 1e-10
            # same bound in resolvent-norm form
            assert ra.resolvent_norm(t + s, 0.0) <= ra.resolvent_norm(t, 0.0) / (1 - gamma) + 1e-8
