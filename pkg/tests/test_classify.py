import math

import numpy as np
import pytest

from anderson2p.classify import (
    classify_box,
    energy_grid,
    exists_resonant_pair,
    is_cnr,
    is_nontunnelling,
    is_ns,
    is_resonant,
    nt_decay_discount,
    nt_size_condition,
    nt_to_ns_check,
    resonance_width,
)
from anderson2p.disorder import DistributionSpec, InteractionSpec, domain_for_boxes, sample_potential
from anderson2p.geometry import Box1, Box2, Point1, Point2
from anderson2p.msa import schedule
from anderson2p.operators import assemble_two_particle

from .conftest import box_with_sample
from .oracles import dense_inverse_green, grid_resonant_pair


def _interaction():
    return InteractionSpec.triangular(1, 1.0)


class TestIsNS:
    def test_mass_zero_threshold_one(self):
        box, sample = box_with_sample(Point2.of((0,), (0,)), 2, seed=1)
        ns, w = is_ns(box, sample, _interaction(), 20.0, -5.0, 0.0)
        assert w.threshold == 1.0
        assert ns == (w.max_boundary_gf <= 1.0)

    def test_single_point_vacuous(self):
        box, sample = box_with_sample(Point2.of((0,), (4,)), 0, seed=1)
        ns, w = is_ns(box, sample, _interaction(), 1.0, 0.0, 1.0)
        assert ns and w.degenerate

    def test_matches_dense_inverse(self):
        rng = np.random.default_rng(44)
        for _ in range(25):
            box, sample = box_with_sample(Point2.of((0,), (0,)), 3,
                                          seed=int(rng.integers(1e9)))
            op = assemble_two_particle(box, sample, _interaction(), 20.0)
            e = 0.0
            m = 0.5
            ns, w = is_ns(box, sample, _interaction(), 20.0, e, m, op=op)
            i = op.center_index()
            bidx = op.boundary_indices()
            brute = max(
                abs(dense_inverse_green(op.matrix, e, i, int(j))) for j in bidx
            )
            assert w.max_boundary_gf == pytest.approx(brute, rel=1e-8, abs=1e-10)
            assert ns == (brute <= math.exp(-m * box.radius))

    def test_resonant_energy_classified_singular(self):
        box, sample = box_with_sample(Point2.of((0,), (0,)), 1, seed=2)
        op = assemble_two_particle(box, sample, _interaction(), 1.0)
        e = float(op.eigenvalues()[0])
        ns, w = is_ns(box, sample, _interaction(), 1.0, e, 0.5, op=op)
        assert not ns and w.resonant


class TestIsResonant:
    def test_exact_eigenvalue(self):
        box, sample = box_with_sample(Point2.of((0,), (0,)), 1, seed=3)
        op = assemble_two_particle(box, sample, _interaction(), 1.0)
        res, gap = is_resonant(op.eigenvalues(), float(op.eigenvalues()[2]), 1, 0.5)
        assert res and gap == 0.0

    def test_beyond_hull(self):
        box, sample = box_with_sample(Point2.of((0,), (0,)), 1, seed=3)
        op = assemble_two_particle(box, sample, _interaction(), 1.0)
        e = float(op.eigenvalues()[-1]) + 1.0
        for L in (1, 2, 5):
            res, _ = is_resonant(op.eigenvalues(), e, L, 0.5)
            assert not res

    def test_threshold_arithmetic(self):
        # width exp(-4**0.5) ~ 0.1353; a gap of 0.2 is non-resonant
        ev = np.array([1.0])
        res, gap = is_resonant(ev, 1.2, 4, 0.5)
        assert not res and gap == pytest.approx(0.2)
        assert resonance_width(4, 0.5) == pytest.approx(math.exp(-2.0))


class TestExistsResonantPair:
    def test_identical_spectra(self):
        ev = np.array([0.0, 1.0, 2.0])
        hit, wit = exists_resonant_pair(ev, ev, (-0.5, 2.5), 3, 0.5)
        assert hit and wit[0] == wit[1]

    def test_separated_spectra(self):
        hit, _ = exists_resonant_pair(
            np.array([0.0]), np.array([1.0]), None, 2, 0.5)
        assert not hit  # windows of width ~0.24 around 0 and 1 are disjoint

    def test_matches_grid_oracle(self):
        rng = np.random.default_rng(5)
        n_checked = n_disagree = 0
        for _ in range(200):
            L = int(rng.integers(2, 5))
            ev1 = np.sort(rng.uniform(-2, 2, size=9))
            ev2 = np.sort(rng.uniform(-2, 2, size=9))
            interval = (-1.0, 1.0)
            exact, _ = exists_resonant_pair(ev1, ev2, interval, L, 0.5)
            width = resonance_width(L, 0.5)
            spacing = width / 10.0
            bruteforce = grid_resonant_pair(ev1, ev2, interval, L, 0.5, spacing)
            if exact != bruteforce:
                # disagreement is tolerated only when the exact overlap
                # window is narrower than two grid steps
                lo = np.maximum(ev1[:, None], ev2[None, :]) - width
                hi = np.minimum(ev1[:, None], ev2[None, :]) + width
                widths = np.clip(hi - lo, 0, None)
                assert widths.max() < 2 * spacing or not exact
                n_disagree += 1
            n_checked += 1
        assert n_checked == 200
        assert n_disagree <= 5


class TestEnergyGrid:
    def test_spacing_rule(self):
        g = energy_grid((-1.0, 1.0), 2, 0.5)
        delta = g[1] - g[0]
        assert delta <= min(0.02, 0.5 * resonance_width(2, 0.5)) + 1e-12
        assert g[0] == -1.0 and g[-1] == 1.0


class TestCNR:
    def test_far_energy_is_cnr(self, desk):
        parent = Box2.of_origin(1, desk.L[1])
        sample = sample_potential(DistributionSpec.uniform(), 11, 0,
                                  domain_for_boxes([parent]))
        rep = is_cnr(parent.center, 0, desk, sample, _interaction(), desk.g, -50.0)
        assert rep.ok and rep.exhaustive
        assert rep.n_checked == rep.n_candidates > 0

    def test_eigenvalue_not_cnr(self, desk):
        parent = Box2.of_origin(1, desk.L[1])
        sample = sample_potential(DistributionSpec.uniform(), 11, 0,
                                  domain_for_boxes([parent]))
        op = assemble_two_particle(parent, sample, _interaction(), desk.g)
        e = float(op.eigenvalues()[5])
        rep = is_cnr(parent.center, 0, desk, sample, _interaction(), desk.g, e)
        assert not rep.ok
        assert rep.failed_radius == parent.radius  # condition (i) fails

    def test_matches_exhaustive_enumeration(self):
        # J=1 schedule: the only probed radius is L0+1
        sched = schedule(2, 1.5, 0.5, 1.0, 1, J=1, g=8.0, d=1)
        parent = Box2.of_origin(1, sched.L[1])
        sample = sample_potential(DistributionSpec.uniform(), 23, 0,
                                  domain_for_boxes([parent]))
        inter = _interaction()
        rng = np.random.default_rng(0)
        for _ in range(20):
            e = float(rng.uniform(-2, 10))
            rep = is_cnr(parent.center, 0, sched, sample, inter, sched.g, e)
            # brute force: parent NR plus every radius-3 sub-box NR
            ok = not is_resonant(
                assemble_two_particle(parent, sample, inter, sched.g).eigenvalues(),
                e, parent.radius, sched.beta)[0]
            sub_r = sched.L[0] + 1
            if ok:
                for off in Box2.of_origin(1, parent.radius - sub_r).points():
                    sub = Box2(Point2.of(off[:1], off[1:]), sub_r)
                    sub_ev = assemble_two_particle(sub, sample, inter,
                                                   sched.g).eigenvalues()
                    if is_resonant(sub_ev, e, sub_r, sched.beta)[0]:
                        ok = False
                        break
            assert rep.ok == ok


class TestNonTunnelling:
    def test_mass_zero_always_nt(self):
        box = Box1(Point1((0,)), 2)
        sample = sample_potential(DistributionSpec.uniform(), 2, 0,
                                  domain_for_boxes([box]))
        ok, w = is_nontunnelling(box, sample, 5.0, 0.0)
        assert ok and w.max_product <= 1.0

    def test_free_operator_tunnels(self):
        # extended eigenvectors of the hopping-only operator carry sizable
        # center-boundary products, so a moderate mass fails at small radius
        box = Box1(Point1((0,)), 3)
        sample = sample_potential(DistributionSpec.uniform(), 2, 0,
                                  domain_for_boxes([box]))
        ok, w = is_nontunnelling(box, sample, 0.0, 1.0)
        assert not ok
        # explicit free eigenvectors: sin profiles over n = 7 sites
        n = box.npoints
        k = np.arange(1, n + 1)
        vecs = np.sin(np.outer(k, k) * np.pi / (n + 1))
        vecs /= np.linalg.norm(vecs, axis=0)
        center, edge = n // 2, 0
        brute = np.abs(vecs[center] * vecs[edge]).max()
        assert w.max_product == pytest.approx(brute, abs=1e-10)

    def test_monotone_in_mass(self):
        box = Box1(Point1((0,)), 2)
        sample = sample_potential(DistributionSpec.uniform(), 8, 0,
                                  domain_for_boxes([box]))
        _, w = is_nontunnelling(box, sample, 30.0, 0.0)
        cap = w.cap
        for frac in (0.25, 0.5, 0.9):
            ok, _ = is_nontunnelling(box, sample, 30.0, frac * cap)
            assert ok
        ok, _ = is_nontunnelling(box, sample, 30.0, cap * 1.01 + 1e-9)
        assert not ok

    def test_degenerate_radius_zero(self):
        box = Box1(Point1((3,)), 0)
        sample = sample_potential(DistributionSpec.uniform(), 2, 0,
                                  np.array([[3]]))
        ok, w = is_nontunnelling(box, sample, 1.0, 5.0)
        assert ok and w.degenerate


class TestNtToNs:
    def test_discount_arithmetic(self):
        # radius 100, beta 1/2, one dimension
        val = nt_decay_discount(100, 0.5, 1)
        assert val == pytest.approx(1 - 0.1 - math.log(201**2) / 100)
        assert 1.0 * val == pytest.approx(0.79392, abs=1e-4)

    def test_simplified_bound(self):
        # whenever ln((2L+1)^{2d})/L <= L^{beta-1}, the discount is at least
        # 1 - 2 L^{beta-1}
        for L in (9, 20, 100, 1000):
            if math.log((2 * L + 1) ** 2) / L <= L ** (-0.5):
                assert nt_decay_discount(L, 0.5, 1) >= 1 - 2 * L ** (-0.5)

    def test_size_condition_first_holds_at_nine(self):
        assert not nt_size_condition(8, 0.5, 1)
        assert nt_size_condition(9, 0.5, 1)

    def test_hypothesis_failure_skips(self):
        box, sample = box_with_sample(Point2.of((0,), (30,)), 9, seed=2)
        rep = nt_to_ns_check(box, sample, _interaction(), 2.0, 0.0, 50.0, 0.5)
        assert rep.skipped  # mass 50 NT cannot hold for a real sample

    def test_implication_on_seeded_batch(self):
        from anderson2p.operators import single_particle_factors

        rng = np.random.default_rng(77)
        inter = _interaction()
        g = 25.0
        L = 9
        n_ok = 0
        for s in range(60):
            off = int(rng.integers(2 * L + 2, 5 * L))
            box = Box2(Point2.of((0,), (off,)), L)
            sample = sample_potential(DistributionSpec.uniform(), 1000 + s, 0,
                                      domain_for_boxes([box]))
            # sharpest mass still satisfying both non-tunnelling hypotheses
            _, w1 = is_nontunnelling(Box1(box.center.x1, L), sample, g, 1.0, "l1")
            _, w2 = is_nontunnelling(Box1(box.center.x2, L), sample, g, 1.0, "l1")
            # a hair under the cap so the threshold comparison is not an
            # exact floating-point tie
            m_hat = min(w1.cap, w2.cap) * (1.0 - 1e-9)
            if m_hat < 1.0:
                continue
            # energy at the midpoint of a wide interior spectral gap, so the
            # non-resonance hypothesis verifies on most instances
            op1, op2 = single_particle_factors(box, sample, g, "l1")
            sums = np.sort(np.add.outer(op1.eigenvalues(),
                                        op2.eigenvalues()).ravel())
            gaps = np.diff(sums)
            j = int(np.argmax(gaps[5:-5])) + 5
            e = float(0.5 * (sums[j] + sums[j + 1]))
            rep = nt_to_ns_check(box, sample, inter, g, e, m_hat, 0.5, "l1")
            if rep.skipped:
                continue
            assert rep.ns_ok, f"deterministic decay step failed: {rep}"
            n_ok += 1
        assert n_ok >= 40


class TestClassifyReport:
    def test_flags_reproducible_from_witnesses(self, desk):
        box = Box2.of_origin(1, 3)
        sample = sample_potential(DistributionSpec.uniform(), 21, 0,
                                  domain_for_boxes([box]))
        rep = classify_box(box, sample, _interaction(), desk.g, 1.0, 0.5,
                           nt_mass=1.0)
        assert rep.ns == (rep.max_boundary_gf <= math.exp(-0.5 * box.radius))
        assert rep.resonant == (rep.gap < resonance_width(box.radius, rep.beta))
        assert rep.nt == (rep.nt_max_product <= math.exp(-rep.nt_mass * box.radius))
        assert rep.interactive  # diagonal center
        rec = rep.to_record()
        assert rec["kind"] == "classification"
