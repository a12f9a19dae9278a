import math
from types import SimpleNamespace

import numpy as np
import pytest

from app.contour.edges import edge_strength
from app.contour.hierarchy import build_hierarchy
from app.errors import DegenerateGeometryError, HistogramMismatchError
from app.imaging.histogram import ColorHistogram
from app.imaging.raster import RegionMask
from app.pipeline.fixtures import generate_fixture
from app.structure import divergence
from app.structure.boundary_edges import BoundaryEdge, collect_boundary_edges, resample_chain
from app.structure.curves import biarc, edge_end_state, fit_curve, fit_polyline, menger_curvature
from app.structure.divergence import MAX_DIVERGENCE, js_divergence, pair_cost
from app.structure.matching import match_edges, match_from_costs


def _histogram(rng, bins=4):
    counts = rng.random(3 * bins)
    return ColorHistogram(bins, counts / counts.sum())


def _stub(edge_id, chain, samples=None, strength=1.0, position=0.0):
    chain = np.asarray(chain, dtype=np.intp)
    if samples is None:
        samples = resample_chain(chain, 3.0)
    return BoundaryEdge(
        id=edge_id,
        contour_id=edge_id,
        pixel_chain=chain,
        samples=np.asarray(samples, dtype=np.float64),
        strength=strength,
        boundary_position=position,
        flank_histograms=None,
        exposed_at=0.5,
    )


# Histogram distance


def test_js_divergence_axioms(rng):
    for _ in range(1000):
        p, q = _histogram(rng), _histogram(rng)
        assert js_divergence(p, p) == 0.0
        value = js_divergence(p, q)
        assert value == js_divergence(q, p)
        assert 0.0 <= value <= MAX_DIVERGENCE


def test_js_divergence_of_disjoint_supports_is_maximal():
    p = ColorHistogram(2, np.array([1, 0, 1, 0, 1, 0]) / 3.0)
    q = ColorHistogram(2, np.array([0, 1, 0, 1, 0, 1]) / 3.0)
    assert js_divergence(p, q) == pytest.approx(2.0 * math.log(2.0))


def test_js_divergence_rejects_mixed_binning(rng):
    with pytest.raises(HistogramMismatchError):
        js_divergence(_histogram(rng, 4), _histogram(rng, 8))


def test_pair_cost_of_an_edge_with_itself_is_zero(rng):
    edge = SimpleNamespace(strength=0.7, flank_histograms=(_histogram(rng), _histogram(rng)))
    assert pair_cost(edge, edge, 1.0).cost == 0.0
    assert pair_cost(edge, edge, 1.0, metric="regularized").cost == 0.0


def test_pair_cost_weights_flank_distance_by_strength_gap(monkeypatch):
    monkeypatch.setattr(divergence, "flank_distances", lambda s, t: ((0.1, 0.2), (0.5, 0.5)))
    source = SimpleNamespace(strength=0.9)
    target = SimpleNamespace(strength=0.6)

    paper_metric = pair_cost(source, target, 0.9, delta_h=0.6)
    regularized = pair_cost(source, target, 0.9, delta_h=0.6, metric="regularized")

    assert paper_metric.cost == pytest.approx(0.1)
    assert paper_metric.distances == (0.1, 0.2)
    assert paper_metric.admissible
    assert regularized.cost == pytest.approx(0.4)


def test_pair_cost_prefers_the_cheaper_side_correspondence(monkeypatch):
    monkeypatch.setattr(divergence, "flank_distances", lambda s, t: ((0.7, 0.65), (0.05, 0.1)))
    source, target = SimpleNamespace(strength=1.0), SimpleNamespace(strength=0.5)

    result = pair_cost(source, target, 1.0, delta_h=0.6)

    assert result.distances == (0.05, 0.1)
    assert result.cost == pytest.approx(0.5 * 0.15)


def test_pair_cost_admissibility_needs_both_flanks_close(monkeypatch):
    monkeypatch.setattr(divergence, "flank_distances", lambda s, t: ((0.1, 0.7), (0.7, 0.1)))
    source, target = SimpleNamespace(strength=1.0), SimpleNamespace(strength=0.5)
    assert not pair_cost(source, target, 1.0, delta_h=0.6).admissible


# Pairing


def _crossing(first, second) -> bool:
    (a, b), (c, d) = sorted(first), sorted(second)
    return a < c < b < d or c < a < d < b


def _brute_force(costs, admissible, mu):
    k = costs.shape[0]
    best = math.inf

    def search(i, used, pairs, total):
        nonlocal best
        while i < k and i in used:
            i += 1
        if i == k:
            if not any(_crossing(p, q) for n, p in enumerate(pairs) for q in pairs[n + 1:]):
                best = min(best, total)
            return
        search(i + 1, used | {i}, pairs, total + mu)
        for j in range(i + 1, k):
            if j not in used and admissible[i, j]:
                search(i + 1, used | {i, j}, pairs + [(i, j)], total + costs[i, j])

    search(0, frozenset(), [], 0.0)
    return best


@pytest.mark.parametrize("k", range(1, 9))
def test_matching_agrees_with_exhaustive_search(k, rng):
    mu = 0.5
    for _ in range(6):
        costs = rng.integers(0, 16, size=(k, k)) / 8.0
        costs = np.triu(costs, 1) + np.triu(costs, 1).T
        admissible = rng.random((k, k)) < 0.7
        admissible = np.triu(admissible, 1) | np.triu(admissible, 1).T

        total, pairs = match_from_costs(costs, admissible, mu)

        assert total == _brute_force(costs, admissible, mu)
        assert not any(_crossing(p, q) for n, p in enumerate(pairs) for q in pairs[n + 1:])
        assert all(admissible[i, j] for i, j in pairs)
        expected = sum(costs[i, j] for i, j in pairs) + mu * (k - 2 * len(pairs))
        assert total == expected


def test_two_edges_pair_only_when_cheaper_than_leaving_both():
    admissible = np.array([[False, True], [True, False]])
    cheap = np.array([[0.0, 0.1], [0.1, 0.0]])
    assert match_from_costs(cheap, admissible, 0.25) == (0.1, [(0, 1)])

    dear = np.array([[0.0, 0.6], [0.6, 0.0]])
    assert match_from_costs(dear, admissible, 0.25) == (0.5, [])


def test_cost_tie_prefers_fewer_pairs():
    admissible = np.array([[False, True], [True, False]])
    tied = np.array([[0.0, 0.5], [0.5, 0.0]])
    assert match_from_costs(tied, admissible, 0.25) == (0.5, [])


def test_equal_cost_matchings_prefer_the_smallest_id_sequence():
    costs = np.zeros((4, 4))
    admissible = np.zeros((4, 4), dtype=bool)
    for i, j in ((0, 1), (2, 3), (0, 3), (1, 2)):
        costs[i, j] = costs[j, i] = 0.1
        admissible[i, j] = admissible[j, i] = True

    total, pairs = match_from_costs(costs, admissible, 0.25)

    assert total == pytest.approx(0.2)
    assert pairs == [(0, 1), (2, 3)]


def test_inadmissible_pairs_are_never_formed():
    costs = np.zeros((2, 2))
    admissible = np.zeros((2, 2), dtype=bool)
    assert match_from_costs(costs, admissible, 0.25) == (0.5, [])


def test_match_edges_pairs_identical_edges(cfg, rng):
    flanks = (_histogram(rng), _histogram(rng))
    edges = [
        SimpleNamespace(id=i, strength=0.5, flank_histograms=flanks, hit=(i * 10, 0), boundary_position=float(i))
        for i in range(2)
    ]
    pairing = match_edges(edges, cfg)

    assert [(s, t) for s, t, _ in pairing.pairs] == [(0, 1)]
    assert pairing.unmatched == []
    assert pairing.partner_of(1) == 0


def test_two_stripes_pair_their_own_ends(cfg, rng):
    # Boundary order around the hole: upper-right, lower-right, lower-left, upper-left.
    upper = (_histogram(rng), _histogram(rng))
    lower = (_histogram(rng), _histogram(rng))
    layout = [(upper, 1.0, (30, 10)), (lower, 0.6, (30, 20)), (lower, 0.5, (10, 20)), (upper, 0.9, (10, 10))]
    edges = [
        SimpleNamespace(id=i, strength=s, flank_histograms=f, hit=hit, boundary_position=float(i))
        for i, (f, s, hit) in enumerate(layout)
    ]

    pairing = match_edges(edges, cfg)

    assert sorted((s, t) for s, t, _ in pairing.pairs) == [(0, 3), (1, 2)]
    assert pairing.total_cost == 0.0


def test_match_edges_requires_boundary_order(cfg):
    edges = [SimpleNamespace(id=0, boundary_position=5.0), SimpleNamespace(id=1, boundary_position=1.0)]
    with pytest.raises(ValueError):
        match_edges(edges, cfg)


def test_match_edges_handles_no_edges(cfg):
    pairing = match_edges([], cfg)
    assert pairing.pairs == [] and pairing.total_cost == 0.0


# Curvature


def test_menger_curvature_examples():
    assert menger_curvature((0, 0), (1, 0), (2, 0)) == 0.0
    r = 5.0
    assert menger_curvature((r, 0), (0, r), (-r, 0)) == pytest.approx(1.0 / r)
    assert menger_curvature((-r, 0), (0, r), (r, 0)) == pytest.approx(-1.0 / r)
    with pytest.raises(DegenerateGeometryError):
        menger_curvature((1, 1), (1, 1), (2, 3))


def test_menger_curvature_matches_circumradius(rng):
    for _ in range(200):
        a, b, c = rng.uniform(-10, 10, size=(3, 2))
        area = abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])) / 2.0
        if area < 1e-2:
            continue
        sides = np.linalg.norm(a - b) * np.linalg.norm(b - c) * np.linalg.norm(c - a)
        radius = sides / (4.0 * area)
        assert abs(menger_curvature(a, b, c)) == pytest.approx(1.0 / radius, rel=1e-9)


def test_fit_polyline_prefers_one_segment_for_a_line():
    positions = np.arange(10, dtype=np.float64)
    values = 0.01 * positions + 0.02
    bounds, lines = fit_polyline(positions, values, segment_penalty=2.0)
    assert bounds == [(0, 9)]
    assert lines[0] == pytest.approx((0.01, 0.02))


# Transition curves


def test_straight_gap_gives_straight_curve(cfg):
    inside = np.zeros((21, 32), dtype=bool)
    inside[:, 11:21] = True
    mask = RegionMask(inside)
    source = _stub(0, [(x, 10) for x in range(0, 11)])
    target = _stub(1, [(x, 10) for x in range(31, 20, -1)])

    curve = fit_curve(source, target, mask, cfg)

    assert not curve.fallback
    assert curve.length == pytest.approx(11.0, abs=1e-3)
    assert np.allclose(curve.samples[:, 1], 10.0, atol=1e-6)
    assert np.allclose(curve.curvature_profile[:, 1], 0.0, atol=1e-6)


def _arc_points(center, radius, start, stop, count):
    angles = np.linspace(start, stop, count)
    return np.stack([center[0] + radius * np.cos(angles), center[1] + radius * np.sin(angles)], axis=1)


def test_circular_gap_follows_the_circle(cfg):
    center, radius = np.array([40.0, 40.0]), 25.0
    ys, xs = np.mgrid[0:64, 0:64]
    distance = np.hypot(xs - center[0], ys - center[1])
    mask = RegionMask((xs < 40) & (ys < 40) & (distance >= 18) & (distance <= 32))

    # Travel toward the gap: counter-clockwise into (15, 40), clockwise into (40, 15).
    step = 3.0 / radius
    source_samples = _arc_points(center, radius, math.pi - 5 * step, math.pi, 6)
    target_samples = _arc_points(center, radius, 1.5 * math.pi + 5 * step, 1.5 * math.pi, 6)
    source_samples[-1] = (15.0, 40.0)
    target_samples[-1] = (40.0, 15.0)
    source = _stub(0, [(16, 50), (15, 40)], source_samples)
    target = _stub(1, [(50, 16), (40, 15)], target_samples)

    curve = fit_curve(source, target, mask, cfg)

    assert not curve.fallback
    radial = np.hypot(curve.samples[:, 0] - center[0], curve.samples[:, 1] - center[1])
    assert np.abs(radial - radius).max() < 0.5
    assert np.allclose(curve.curvature_profile[:, 1], 1.0 / radius, atol=1e-3)
    assert curve.length == pytest.approx(radius * math.pi / 2, rel=1e-2)


def test_offset_parallel_edges_give_an_s_curve(cfg):
    inside = np.zeros((32, 40), dtype=bool)
    inside[5:26, 11:25] = True
    mask = RegionMask(inside)
    source = _stub(0, [(x, 10) for x in range(0, 11)])
    target = _stub(1, [(x, 20) for x in range(39, 24, -1)])

    curve = fit_curve(source, target, mask, cfg)

    assert np.allclose(curve.samples[0], (10.0, 10.0))
    assert np.hypot(*(curve.samples[-1] - (25.0, 20.0))) <= cfg.curve_endpoint_tolerance
    kappa = curve.curvature_profile[:, 1]
    assert kappa.max() > 0 > kappa.min()


def test_fitted_curve_is_g2_continuous(cfg):
    inside = np.zeros((32, 40), dtype=bool)
    inside[5:26, 11:25] = True
    mask = RegionMask(inside)
    source = _stub(0, [(x, 10) for x in range(0, 11)])
    target = _stub(1, [(x, 20) for x in range(39, 24, -1)])

    curve = fit_curve(source, target, mask, cfg)

    assert not curve.fallback
    assert np.hypot(*(curve.samples[-1] - (25.0, 20.0))) <= cfg.curve_endpoint_tolerance

    for first, second in zip(curve.segments, curve.segments[1:]):
        assert second.kappa == pytest.approx(first.end_kappa)
    steps = np.diff(curve.headings)
    assert np.abs(steps).max() < 0.5
    assert curve.headings[0] == pytest.approx(0.0, abs=1e-9)


def _pixel_arc(center, radius, start, stop):
    """8-connected digitised arc, in travel order."""
    angles = np.linspace(start, stop, 400)
    xs = np.rint(center[0] + radius * np.cos(angles)).astype(int)
    ys = np.rint(center[1] + radius * np.sin(angles)).astype(int)
    chain = [(xs[0], ys[0])]
    for point in zip(xs[1:], ys[1:]):
        if point != chain[-1]:
            chain.append(point)
    return chain


def test_end_state_of_a_digitised_arc_matches_the_circle():
    center, radius = (100.0, 100.0), 36.0
    # Counter-clockwise from angle 0.2 to 1.2: ends heading along 1.2 + pi / 2.
    edge = _stub(0, _pixel_arc(center, radius, 0.2, 1.2))

    heading, kappa = edge_end_state(edge)

    hit = edge.pixel_chain[-1]
    radial = math.atan2(hit[1] - center[1], hit[0] - center[0])
    assert abs(math.remainder(heading - (radial + math.pi / 2), 2 * math.pi)) < 0.05
    assert kappa == pytest.approx(1.0 / radius, rel=0.15)


def test_end_state_of_a_straight_stub_has_no_curvature():
    heading, kappa = edge_end_state(_stub(0, [(x, 2 * x) for x in range(0, 9)]))
    assert heading == pytest.approx(math.atan2(2.0, 1.0))
    assert kappa == pytest.approx(0.0, abs=1e-12)


def test_biarc_of_points_on_a_circle_is_the_circle():
    center, radius = np.array([40.0, 40.0]), 25.0
    arcs = biarc(np.array([15.0, 40.0]), np.array([40.0, 15.0]), -math.pi / 2, 0.0)

    assert len(arcs) == 2
    for x, y, _, kappa, _ in arcs:
        assert math.hypot(x - center[0], y - center[1]) == pytest.approx(radius)
        assert kappa == pytest.approx(1.0 / radius)
    assert sum(arc[-1] for arc in arcs) == pytest.approx(radius * math.pi / 2)


def test_biarc_between_offset_parallel_tangents_turns_both_ways():
    arcs = biarc(np.array([10.0, 10.0]), np.array([25.0, 20.0]), 0.0, 0.0)

    (_, _, _, first, _), (_, _, _, second, _) = arcs
    assert first > 0 > second
    assert first == pytest.approx(-second)


def test_s_curve_knots_sit_at_the_curvature_breaks(cfg):
    inside = np.zeros((32, 40), dtype=bool)
    inside[5:26, 11:25] = True
    mask = RegionMask(inside)
    source = _stub(0, [(x, 10) for x in range(0, 11)])
    target = _stub(1, [(x, 20) for x in range(39, 24, -1)])

    curve = fit_curve(source, target, mask, cfg)

    # Straight stubs meet two opposite arcs; the only break inside the gap
    # is where the arcs join, halfway along.
    assert not curve.fallback
    fractions = curve.curvature_profile[:, 0] / curve.length
    assert np.abs(fractions - 0.5).min() < 0.1


def test_curve_between_coincident_hits_is_degenerate(cfg):
    mask = RegionMask(np.zeros((8, 8), dtype=bool))
    source = _stub(0, [(0, 3), (3, 3)])
    target = _stub(1, [(6, 3), (3, 3)])
    with pytest.raises(DegenerateGeometryError):
        fit_curve(source, target, mask, cfg)


# Boundary edges


def test_circle_step_yields_edges_on_both_sides(cfg):
    scene = generate_fixture("circle-step", 64, seed=0)
    field = edge_strength(scene.image, scene.mask, cfg)
    hierarchy = build_hierarchy(field, scene.mask, cfg)

    edges = collect_boundary_edges(hierarchy, scene.image, scene.mask, cfg)

    assert len(edges) >= 2
    assert [edge.id for edge in edges] == list(range(len(edges)))
    positions = [edge.boundary_position for edge in edges]
    assert positions == sorted(positions)
    front = scene.mask.boundary()
    for edge in edges:
        x, y = edge.hit
        assert front[y, x]
        assert edge.strength > cfg.delta_t
        assert np.allclose(edge.samples[-1], edge.pixel_chain[-1])
    rows = [edge.hit[1] for edge in edges]
    assert min(rows) < 32 < max(rows)


def test_constant_image_has_no_boundary_edges(gray, cfg):
    inside = np.zeros((32, 32), dtype=bool)
    inside[12:20, 12:20] = True
    mask = RegionMask(inside)
    image = gray(np.full((32, 32), 0.5))

    hierarchy = build_hierarchy(edge_strength(image, mask, cfg), mask, cfg)

    assert collect_boundary_edges(hierarchy, image, mask, cfg) == []


def test_resample_chain_keeps_the_hit():
    chain = np.array([(x, 4) for x in range(10)])
    samples = resample_chain(chain, 3.0)
    assert samples[-1].tolist() == [9.0, 4.0]
    assert samples[0].tolist() == [0.0, 4.0]
    assert np.allclose(np.diff(samples[:, 0]), 3.0)
