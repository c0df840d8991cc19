import math

import numpy as np
import pytest

import champagne as ch
from champagne.domains import (
    ChampagneDomain,
    build_champagne,
    build_finitely_connected,
    criterion_integral,
    criterion_sum,
    parse_profile,
    transport_domain,
)
from champagne.errors import OverlapError, ValidationError


# -- profiles ----------------------------------------------------------------

def test_profile_parsing_roundtrip():
    for spec in ("const:0.3", "power:0.1,2", "expinv:1,1"):
        assert parse_profile(spec).describe() == spec
    with pytest.raises(ValidationError):
        parse_profile("power:2,1")      # c >= 1
    with pytest.raises(ValidationError):
        parse_profile("nosuch:1")


def test_profile_monotone_and_bounded():
    t = np.linspace(0.01, 0.99, 200)
    for prof in (ch.const_profile(0.3), ch.power_profile(0.2, 1.5), ch.expinv_profile(1, 1)):
        v = prof(t)
        assert np.all(v > 0) and np.all(v < 1)
        assert np.all(np.diff(v) <= 1e-15)


def test_table_profile_interpolation():
    prof = ch.table_profile([0.1, 0.5, 0.9], [0.3, 0.2, 0.05])
    assert prof(0.5) == pytest.approx(0.2)
    assert prof(0.3) == pytest.approx(0.25)
    assert prof(0.05) == pytest.approx(0.3)   # clamped left
    assert prof(0.99) == pytest.approx(0.05)  # clamped right
    with pytest.raises(ValidationError):
        ch.table_profile([0.1, 0.5], [0.2, 0.3])  # increasing phi


# -- criterion ---------------------------------------------------------------

def test_criterion_closed_forms():
    r = criterion_integral(ch.expinv_profile(1, 1))
    assert r.classification == "convergent"
    assert r.value == pytest.approx(1.0, abs=1e-9)
    r = criterion_integral(ch.expinv_profile(1, 2))
    assert r.value == pytest.approx(0.5, abs=1e-9)
    # general expinv integrates to 1/(c beta)
    r = criterion_integral(ch.expinv_profile(2, 3))
    assert r.value == pytest.approx(1.0 / 6.0, abs=1e-9)


def test_criterion_divergent_families():
    assert criterion_integral(ch.power_profile(0.1, 2)).classification == "divergent"
    assert criterion_integral(ch.const_profile(0.3)).classification == "divergent"
    assert criterion_sum(ch.power_profile(0.1, 2)).classification == "divergent"
    assert criterion_sum(ch.const_profile(0.3)).classification == "divergent"


def test_criterion_sum_geometric():
    r = criterion_sum(ch.expinv_profile(1, 1), K=2.0)
    assert r.classification == "convergent"
    assert r.value == pytest.approx(1.0, abs=1e-9)
    # terms K^(-beta j) sum to 1/(c (K^beta - 1))
    r = criterion_sum(ch.expinv_profile(1, 1), K=4.0)
    assert r.value == pytest.approx(1.0 / 3.0, abs=1e-9)


def test_criterion_sum_edge_cases():
    r = criterion_sum(ch.expinv_profile(1, 1), J_max=0)
    assert r.classification == "inconclusive"
    assert r.partial_sums == ()
    r = criterion_sum(ch.expinv_profile(1, 1), J_max=40)
    assert r.classification == "convergent"  # term-ratio tail handles short horizons
    assert r.value == pytest.approx(1.0, abs=1e-9)


def test_criterion_partial_sums_nondecreasing():
    r = criterion_sum(ch.power_profile(0.1, 2), J_max=500)
    ps = np.asarray(r.partial_sums)
    assert np.all(np.diff(ps) >= 0)


def test_criterion_table_inconclusive():
    t = np.linspace(0.01, 0.99, 50)
    prof = ch.table_profile(t, np.exp(-1 / (1 - t)) * 0.99)
    assert criterion_integral(prof).classification == "inconclusive"
    assert criterion_sum(prof).classification == "inconclusive"


@pytest.mark.parametrize("K", [2.0, 4.0, 10.0])
def test_criterion_forms_agree(K):
    profiles = [
        ch.expinv_profile(1, 1),
        ch.expinv_profile(1, 2),
        ch.expinv_profile(0.5, 1.5),
        ch.power_profile(0.1, 2),
        ch.power_profile(0.5, 1.2),
        ch.const_profile(0.3),
    ]
    for prof in profiles:
        ci = criterion_integral(prof)
        cs = criterion_sum(prof, K=K)
        assert ci.classification == cs.classification
        if ci.classification == "convergent":
            assert ci.value > 0 and cs.value > 0


def test_criterion_monotonicity_in_profile():
    # pointwise-smaller phi has larger log(1/phi): convergence is preserved
    small = ch.expinv_profile(2, 1)
    big = ch.expinv_profile(1, 1)
    t = np.linspace(0.01, 0.99, 50)
    assert np.all(small(t) <= big(t))
    assert criterion_integral(big).classification == "convergent"
    assert criterion_integral(small).classification == "convergent"
    assert criterion_integral(small).value <= criterion_integral(big).value


# -- build_champagne ---------------------------------------------------------

def test_build_single_bubble():
    seq = ch.PointSequence(np.array([0.5 + 0j]))
    dom = build_champagne(seq, ch.const_profile(0.25), 1.0)
    ed = ch.pseudo_to_euclidean(ch.PseudoDisk(0.5 + 0j, 0.25))
    assert dom.n_bubbles == 1
    assert dom.centers[0] == pytest.approx(ed.center, abs=1e-15)
    assert dom.radii[0] == pytest.approx(ed.radius, abs=1e-15)


def test_build_lattice_count_and_disjointness():
    seq = ch.generate_ring_lattice(0.5, 1, 6, seed=0)
    dom = build_champagne(seq, ch.power_profile(0.1, 2), 1 - 2.0 ** -6)
    assert dom.n_bubbles == 126
    # independent pairwise gap oracle
    cx, cy, r = dom.centers.real, dom.centers.imag, dom.radii
    for i in range(dom.n_bubbles):
        d = np.hypot(cx - cx[i], cy - cy[i]) - r - r[i]
        d[i] = np.inf
        assert d.min() > 0
    assert dom.circumference_sum == pytest.approx(2 * np.pi * r.sum())


def test_build_rejects_overlap():
    seq = ch.generate_ring_lattice(0.5, 1, 4, seed=0)
    fat = ch.const_profile(0.9)  # far above separation/2 on every ring
    with pytest.raises(OverlapError) as exc:
        build_champagne(seq, fat, 1.0)
    assert exc.value.index_a != exc.value.index_b


def test_build_rejects_covered_start():
    seq = ch.PointSequence(np.array([0.1 + 0j]))
    with pytest.raises(ValidationError):
        build_champagne(seq, ch.const_profile(0.3), 1.0)  # bubble swallows 0


def test_build_order_invariance():
    seq = ch.generate_ring_lattice(0.5, 1, 5, seed=3)
    perm = np.random.default_rng(1).permutation(len(seq))
    shuffled = ch.PointSequence(seq.points[perm])
    a = build_champagne(seq, ch.power_profile(0.1, 2), 1.0)
    b = build_champagne(shuffled, ch.power_profile(0.1, 2), 1.0)
    sa = sorted((round(c.real, 14), round(c.imag, 14), round(r, 14))
                for c, r in zip(a.centers, a.radii))
    sb = sorted((round(c.real, 14), round(c.imag, 14), round(r, 14))
                for c, r in zip(b.centers, b.radii))
    assert sa == sb


def test_criterion_tail_integral():
    from champagne.domains import criterion_tail_integral

    # expinv tail: integral of e^-u from u0 = log(1/(1-R))
    R = 0.9375
    got = criterion_tail_integral(ch.expinv_profile(1, 1), R)
    assert got == pytest.approx(1.0 - R, rel=1e-8)
    assert criterion_tail_integral(ch.power_profile(0.1, 2), R) == math.inf


def test_tail_sum_and_circumference_decay():
    seq = ch.generate_ring_lattice(0.5, 1, 8, seed=0)
    prof = ch.power_profile(0.1, 2)
    doms = [build_champagne(seq, prof, 1 - 2.0 ** -d) for d in (4, 6, 8)]
    tails = [d.tail_sum_points for d in doms]
    assert tails[0] > tails[1] > tails[2] >= 0.0
    # circumference partial sums stay bounded across depth for gamma = 2
    circs = [d.circumference_sum for d in doms]
    assert circs[2] - circs[1] < circs[1] - circs[0]
    assert circs[2] < 1.0


# -- finitely connected ------------------------------------------------------

def test_finitely_connected_counts_by_scan():
    seq = ch.generate_ring_lattice(0.5, 1, 8, seed=0)
    r = 1 - 2.0 ** -6
    dom = build_finitely_connected(seq, 0j, r, "one-minus-r")
    rho = np.abs(seq.points)  # probe at 0
    expected = int(np.sum((rho > 0.5 + 1e-12) & (rho < r - 1e-12)))
    assert dom.n_bubbles == expected
    assert np.allclose(dom.pseudo_radii, 1 - r)


def test_finitely_connected_excludes_center_point():
    seq = ch.PointSequence(np.array([0.3 + 0j, 0.8 + 0j]))
    dom = build_finitely_connected(seq, 0.3 + 0j, 0.9, 0.05)
    assert 0 not in dom.source_index  # rho = 0 <= 1/2 for the probe itself


def test_finitely_connected_empty_annulus():
    seq = ch.PointSequence(np.array([0.2 + 0j]))
    dom = build_finitely_connected(seq, 0j, 0.9, "one-minus-r")
    assert dom.n_bubbles == 0


def test_finitely_connected_overlap_reports_admissible_r():
    pts = 0.8 * np.exp(2j * np.pi * np.arange(40) / 40)  # tightly packed ring
    seq = ch.PointSequence(pts)
    with pytest.raises(OverlapError) as exc:
        build_finitely_connected(seq, 0j, 0.9, 0.45)
    assert "admissible for r >=" in str(exc.value)


# -- serialization and transport ----------------------------------------------

def test_domain_json_roundtrip(tmp_path):
    seq = ch.generate_ring_lattice(0.5, 1, 5, seed=3)
    dom = build_champagne(seq, ch.power_profile(0.1, 2), 1 - 2.0 ** -5)
    path = tmp_path / "dom.json"
    dom.save(path)
    back = ChampagneDomain.load(path)
    assert np.array_equal(back.centers, dom.centers)
    assert np.array_equal(back.radii, dom.radii)
    assert np.array_equal(back.pseudo_radii, dom.pseudo_radii)
    assert back.truncation_R == dom.truncation_R
    assert back.profile_spec == dom.profile_spec


def test_domain_load_without_pseudo_fields(tmp_path):
    dom = ch.domain_from_pseudo([(0.5 + 0j, 0.25)])
    data = dom.to_json_dict()
    for b in data["bubbles"]:
        for k in ("pseudo_cx", "pseudo_cy", "pseudo_radius"):
            b.pop(k)
    back = ChampagneDomain.from_json_dict(data)
    assert back.pseudo_centers[0] == pytest.approx(0.5 + 0j, abs=1e-10)
    assert back.pseudo_radii[0] == pytest.approx(0.25, abs=1e-10)


def test_transport_preserves_pseudo_radii_and_distances():
    dom = ch.domain_from_pseudo([(0.5 + 0j, 0.2), (-0.3 + 0.4j, 0.15)])
    a = 0.35 - 0.2j
    moved = transport_domain(dom, a)
    assert np.allclose(moved.pseudo_radii, dom.pseudo_radii)
    d0 = ch.pseudo_distance(dom.pseudo_centers[0], dom.pseudo_centers[1])
    d1 = ch.pseudo_distance(moved.pseudo_centers[0], moved.pseudo_centers[1])
    assert d1 == pytest.approx(d0, abs=1e-12)
