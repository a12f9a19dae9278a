"""Clothoid-chain transition curves across the target region"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage
from scipy.optimize import least_squares

from app.config import PipelineConfig
from app.errors import DegenerateGeometryError
from app.imaging.raster import RegionMask
from app.structure.boundary_edges import BoundaryEdge, resample_chain

logger = logging.getLogger(__name__)

_HEADING_TOLERANCE = 1e-3
# Gap knots closer than this (fraction of the gap) to either hit are dropped.
_KNOT_MARGIN = 0.1
# Curvatures sharper than a 2 px radius are pixel noise.
_MAX_KAPPA = 0.5


def menger_curvature(p0, p1, p2) -> float:
    """Signed curvature of the circle through three points (positive = left turn in x/y)."""
    a = np.asarray(p0, dtype=np.float64)
    b = np.asarray(p1, dtype=np.float64)
    c = np.asarray(p2, dtype=np.float64)
    ab = b - a
    bc = c - b
    ac = c - a
    lengths = (math.hypot(*ab), math.hypot(*bc), math.hypot(*ac))
    if min(lengths) == 0.0:
        raise DegenerateGeometryError(f"coincident points {tuple(a)}, {tuple(b)}, {tuple(c)}")
    det = ab[0] * bc[1] - ab[1] * bc[0]
    return 2.0 * det / (lengths[0] * lengths[1] * lengths[2])


def wrap_angle(angle: float) -> float:
    return (angle + math.pi) % (2.0 * math.pi) - math.pi


@dataclass(frozen=True)
class ClothoidSegment:
    """Curve piece with curvature linear in arc length."""

    x: float
    y: float
    heading: float
    kappa: float
    rate: float
    length: float

    @property
    def end_kappa(self) -> float:
        return self.kappa + self.rate * self.length


@dataclass(frozen=True)
class StructureCurve:
    source_edge_id: int
    target_edge_id: int
    samples: np.ndarray  # (N, 2) float (x, y)
    arc: np.ndarray  # (N,) arc length at each sample
    headings: np.ndarray  # (N,)
    curvature_profile: np.ndarray  # (K, 2) knots (s, kappa), linear in between
    segments: Tuple[ClothoidSegment, ...] = field(default_factory=tuple)
    fallback: bool = False

    @property
    def length(self) -> float:
        return float(self.arc[-1]) if self.arc.size else 0.0

    def point_at(self, s: float) -> Tuple[float, float]:
        x = float(np.interp(s, self.arc, self.samples[:, 0]))
        y = float(np.interp(s, self.arc, self.samples[:, 1]))
        return x, y


def integrate_segment(
    x: float, y: float, heading: float, kappa: float, rate: float, length: float, step: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """RK4 integration of one clothoid piece; returns arc, (x, y) and headings per node.

    The right-hand side depends on arc length only, so each RK4 step has
    Simpson weights and the heading is exact.
    """
    count = max(1, int(math.ceil(length / step)))
    h = length / count
    u = np.arange(count + 1) * h
    mid = u[:-1] + h / 2.0

    def phi(s):
        return heading + kappa * s + 0.5 * rate * s * s

    cos_nodes, sin_nodes = np.cos(phi(u)), np.sin(phi(u))
    cos_mid, sin_mid = np.cos(phi(mid)), np.sin(phi(mid))
    dx = h / 6.0 * (cos_nodes[:-1] + 4.0 * cos_mid + cos_nodes[1:])
    dy = h / 6.0 * (sin_nodes[:-1] + 4.0 * sin_mid + sin_nodes[1:])
    xs = x + np.concatenate([[0.0], np.cumsum(dx)])
    ys = y + np.concatenate([[0.0], np.cumsum(dy)])
    return u, np.stack([xs, ys], axis=1), phi(u)


def integrate_chain(
    start: Tuple[float, float, float], positions: Sequence[float], knots: Sequence[float], step: float
):
    """Integrate a piecewise-linear curvature profile with knots at the given arc lengths."""
    x, y, heading = start
    segments: List[ClothoidSegment] = []
    arcs, points, headings = [], [], []
    for index in range(len(knots) - 1):
        piece_length = positions[index + 1] - positions[index]
        if piece_length <= 0.0:
            raise ValueError(f"knot positions must increase, got {list(positions)}")
        rate = (knots[index + 1] - knots[index]) / piece_length
        segment = ClothoidSegment(x, y, heading, knots[index], rate, piece_length)
        u, xy, phi = integrate_segment(x, y, heading, knots[index], rate, piece_length, step)
        segments.append(segment)
        keep = slice(0, None) if index == 0 else slice(1, None)
        arcs.append(u[keep] + positions[index])
        points.append(xy[keep])
        headings.append(phi[keep])
        x, y = float(xy[-1, 0]), float(xy[-1, 1])
        heading = float(phi[-1])
    return (
        np.concatenate(arcs),
        np.concatenate(points),
        np.concatenate(headings),
        tuple(segments),
    )


def fit_polyline(positions: np.ndarray, values: np.ndarray, segment_penalty: float):
    """Piecewise-linear least-squares fit chosen by dynamic programming.

    Cost per segment is the squared positional deviation implied by its
    curvature residuals plus segment_penalty. Returns breakpoints and the
    per-segment (slope, intercept) lines.
    """
    n = positions.shape[0]
    if n == 0:
        return [], []
    if n == 1:
        return [(0, 0)], [(0.0, float(values[0]))]

    def line(i: int, j: int):
        s = positions[i:j + 1]
        k = values[i:j + 1]
        if j == i or np.ptp(s) == 0:
            return 0.0, float(k.mean())
        slope, intercept = np.polyfit(s, k, 1)
        return float(slope), float(intercept)

    def error(i: int, j: int) -> float:
        slope, intercept = line(i, j)
        residual = values[i:j + 1] - (slope * positions[i:j + 1] + intercept)
        span = positions[j] - positions[i]
        return float(np.sum((residual * span * span / 2.0) ** 2))

    best = [math.inf] * (n + 1)
    choice = [0] * (n + 1)
    best[0] = 0.0
    for j in range(1, n + 1):
        for i in range(0, j):
            # Segments need two points unless the data has only one left.
            if j - i < 2 and n > 1:
                continue
            cost = best[i] + error(i, j - 1) + segment_penalty
            if cost < best[j]:
                best[j], choice[j] = cost, i
    bounds = []
    j = n
    while j > 0:
        i = choice[j]
        bounds.append((i, j - 1))
        j = i
    bounds.reverse()
    return bounds, [line(i, j) for i, j in bounds]


def edge_end_state(edge: BoundaryEdge) -> Tuple[float, float]:
    """Heading and curvature at the hit, travelling toward the target region.

    A circle is fitted to the whole stub by linear least squares in a frame
    centred on the hit whose x axis runs from the first stub point to the
    hit: y = a (x^2 + y^2) + b x + c. Heading and curvature are read where
    the circle crosses the hit's normal (x = 0).
    """
    points = edge.pixel_chain.astype(np.float64)
    if points.shape[0] < max(3, edge.samples.shape[0]):
        points = edge.samples
    hit = points[-1]
    axis = hit - points[0]
    span = math.hypot(*axis)
    if span == 0.0:
        raise DegenerateGeometryError(f"edge {edge.id} has zero length")
    along = axis / span
    across = np.array([-along[1], along[0]])
    offsets = points - hit
    x, y = offsets @ along, offsets @ across
    design = np.stack([x * x + y * y, x, np.ones_like(x)], axis=1)
    (a, b, c), *_ = np.linalg.lstsq(design, y, rcond=None)
    discriminant = max(1.0 - 4.0 * a * c, 0.0)
    crossing = 2.0 * c / (1.0 + math.sqrt(discriminant))
    slope = b / (1.0 - 2.0 * a * crossing)
    heading = math.atan2(along[1], along[0]) + math.atan(slope)
    radicand = max(b * b + 1.0 - 4.0 * a * c, 1e-12)
    kappa = float(np.clip(2.0 * a / math.sqrt(radicand), -_MAX_KAPPA, _MAX_KAPPA))
    return wrap_angle(heading), kappa


def _allowed_region(mask: RegionMask) -> np.ndarray:
    return mask.inside | mask.boundary()


def _inside_allowed(samples: np.ndarray, allowed: np.ndarray, margin: float = 1.0) -> bool:
    height, width = allowed.shape
    start, end = samples[0], samples[-1]
    for x, y in samples:
        if math.hypot(x - start[0], y - start[1]) <= margin or math.hypot(x - end[0], y - end[1]) <= margin:
            continue
        col, row = int(round(x)), int(round(y))
        if not (0 <= row < height and 0 <= col < width) or not allowed[row, col]:
            return False
    return True


def _hermite(start: np.ndarray, end: np.ndarray, heading_in: float, heading_out: float, t: np.ndarray):
    """Cubic Hermite points, first and second derivatives at parameters t (column vector).

    Tangents of length chord / cos^2(turn / 4) reproduce a circular arc
    to within a fraction of a pixel.
    """
    chord = float(np.hypot(*(end - start)))
    turn = wrap_angle(heading_out - heading_in)
    magnitude = chord / math.cos(turn / 4.0) ** 2
    t0 = magnitude * np.array([math.cos(heading_in), math.sin(heading_in)])
    t1 = magnitude * np.array([math.cos(heading_out), math.sin(heading_out)])
    h00 = 2 * t ** 3 - 3 * t ** 2 + 1
    h10 = t ** 3 - 2 * t ** 2 + t
    h01 = -2 * t ** 3 + 3 * t ** 2
    h11 = t ** 3 - t ** 2
    points = h00 * start + h10 * t0 + h01 * end + h11 * t1
    d1 = (6 * t ** 2 - 6 * t) * start + (3 * t ** 2 - 4 * t + 1) * t0 + (-6 * t ** 2 + 6 * t) * end + (3 * t ** 2 - 2 * t) * t1
    d2 = (12 * t - 6) * start + (6 * t - 4) * t0 + (-12 * t + 6) * end + (6 * t - 2) * t1
    return points, d1, d2


def hermite_bridge(
    start: np.ndarray,
    end: np.ndarray,
    heading_in: float,
    heading_out: float,
    mask: RegionMask,
    step: float,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Cubic Hermite bridge, with stray samples projected onto the allowed region."""
    chord = float(np.hypot(*(end - start)))
    count = max(2, int(math.ceil(1.5 * chord / step)) + 1)
    t = np.linspace(0.0, 1.0, count)[:, None]
    points, d1, d2 = _hermite(start, end, heading_in, heading_out, t)

    allowed = _allowed_region(mask)
    height, width = allowed.shape
    _, (rows, cols) = ndimage.distance_transform_edt(~allowed, return_indices=True)
    for index in range(1, count - 1):
        col, row = int(round(points[index, 0])), int(round(points[index, 1]))
        row = min(max(row, 0), height - 1)
        col = min(max(col, 0), width - 1)
        if not allowed[row, col]:
            points[index] = (cols[row, col], rows[row, col])

    speed = np.hypot(d1[:, 0], d1[:, 1])
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = np.where(speed > 0, (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / speed ** 3, 0.0)
    arc = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(points, axis=0).T))])
    headings = np.arctan2(d1[:, 1], d1[:, 0])
    return points, arc, headings, np.stack([arc, kappa], axis=1)


def _arc_to(point: np.ndarray, heading: float, target: np.ndarray) -> Tuple[float, float, float]:
    """Circular arc leaving point along heading through target: (kappa, length, end heading)."""
    chord = target - point
    span = math.hypot(*chord)
    alpha = math.atan2(
        math.cos(heading) * chord[1] - math.sin(heading) * chord[0],
        math.cos(heading) * chord[0] + math.sin(heading) * chord[1],
    )
    if abs(alpha) < 1e-9:
        return 0.0, span, heading
    return 2.0 * math.sin(alpha) / span, span * alpha / math.sin(alpha), heading + 2.0 * alpha


def biarc(
    start: np.ndarray, end: np.ndarray, heading_in: float, heading_out: float
) -> Optional[List[Tuple[float, float, float, float, float]]]:
    """Two circular arcs of equal tangent length joining the hits.

    Returns (x, y, heading, kappa, length) per arc, or None when the
    tangents admit no such pair.
    """
    t1 = np.array([math.cos(heading_in), math.sin(heading_in)])
    t2 = np.array([math.cos(heading_out), math.sin(heading_out)])
    v = end - start
    denominator = 2.0 * (1.0 - float(t1 @ t2))
    if denominator < 1e-9:
        if abs(float(v @ t2)) < 1e-9:
            return None
        d = float(v @ v) / (4.0 * float(v @ t2))
    else:
        vt = float(v @ (t1 + t2))
        d = (-vt + math.sqrt(vt * vt + denominator * float(v @ v))) / denominator
    if not d > 0.0:
        return None
    joint = (start + end + d * (t1 - t2)) / 2.0
    arcs = []
    point, heading = start, heading_in
    for target in (joint, end):
        if math.hypot(*(target - point)) > 1e-9:
            kappa, length, after = _arc_to(point, heading, target)
            arcs.append((float(point[0]), float(point[1]), heading, kappa, length))
            heading = after
        point = target
    return arcs


def _guide(
    start: np.ndarray, end: np.ndarray, heading_in: float, heading_out: float, spacing: float
) -> Tuple[np.ndarray, float]:
    """Points about `spacing` apart across the gap and the guide length."""
    arcs = biarc(start, end, heading_in, heading_out)
    if arcs is None:
        dense = _hermite(start, end, heading_in, heading_out, np.linspace(0.0, 1.0, 200)[:, None])[0]
        return resample_chain(dense, spacing), float(np.hypot(*np.diff(dense, axis=0).T).sum())
    points = [start[None, :]]
    for x, y, heading, kappa, length in arcs:
        _, xy, _ = integrate_segment(x, y, heading, kappa, 0.0, length, spacing)
        points.append(xy[1:])
    return np.concatenate(points), float(sum(arc[-1] for arc in arcs))


def _stroke_profile(
    source: BoundaryEdge,
    target: BoundaryEdge,
    start: np.ndarray,
    end: np.ndarray,
    heading_in: float,
    heading_out: float,
    cfg: PipelineConfig,
):
    """Polyline curvature over source stub, biarc guide and reversed target stub.

    Returns the guide length, the knot fractions of the gap (ends
    included) and the polyline curvature at each knot.
    """
    guide, guide_length = _guide(start, end, heading_in, heading_out, cfg.chain_spacing)

    pieces = [source.samples, guide, target.samples[::-1]]
    stroke = [pieces[0][0]]
    for point in np.concatenate(pieces)[1:]:
        if math.hypot(*(point - stroke[-1])) > 0.5:
            stroke.append(point)
    stroke = np.array(stroke)
    arc = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(stroke, axis=0).T))])
    gap_start = float(arc[int(np.argmin(np.hypot(*(stroke - start).T)))])
    gap_end = gap_start + guide_length

    positions, values = [], []
    for i in range(1, stroke.shape[0] - 1):
        try:
            values.append(menger_curvature(stroke[i - 1], stroke[i], stroke[i + 1]))
        except DegenerateGeometryError:
            continue
        positions.append(arc[i])
    positions = np.array(positions)
    if values:
        bounds, lines = fit_polyline(positions, np.array(values), cfg.segment_penalty)
    else:
        bounds, lines = [], [(0.0, 0.0)]

    cuts = [
        (positions[left[1]] + positions[right[0]]) / 2.0
        for left, right in zip(bounds, bounds[1:])
    ]

    def curvature(s: float) -> float:
        slope, intercept = lines[int(np.searchsorted(cuts, s))]
        return slope * s + intercept

    fractions = [0.0]
    knots = [0.0]
    for index, cut in enumerate(cuts):
        fraction = (cut - gap_start) / guide_length
        if _KNOT_MARGIN < fraction < 1.0 - _KNOT_MARGIN:
            left, right = lines[index], lines[index + 1]
            fractions.append(fraction)
            knots.append(((left[0] + right[0]) * cut + left[1] + right[1]) / 2.0)
    fractions.append(1.0)
    knots.append(0.0)

    # Keep at least three pieces so the end conditions can be met.
    while len(fractions) < 4:
        widest = int(np.argmax(np.diff(fractions)))
        middle = (fractions[widest] + fractions[widest + 1]) / 2.0
        fractions.insert(widest + 1, middle)
        knots.insert(widest + 1, curvature(gap_start + middle * (gap_end - gap_start)))
    return guide_length, np.array(fractions), np.array(knots)


def fit_curve(
    source: BoundaryEdge,
    target: BoundaryEdge,
    mask: RegionMask,
    cfg: PipelineConfig,
) -> StructureCurve:
    """Bridge the gap between two matched edges with a G2 clothoid chain.

    The chain leaves the source hit along the source tangent with the source
    end curvature and arrives at the target hit with the reversed target
    tangent and curvature. Its pieces and interior knot values come from the
    polyline fit of the curvature along both stubs and a biarc guide
    between them. Least squares then solves the length plus a constant and a
    linear correction of the interior knots; failures fall back to a Hermite
    bridge.
    """
    start = np.asarray(source.hit, dtype=np.float64)
    end = np.asarray(target.hit, dtype=np.float64)
    chord = float(np.hypot(*(end - start)))
    if chord == 0.0:
        raise DegenerateGeometryError(f"edges {source.id} and {target.id} hit the same pixel")

    heading_in, kappa_in = edge_end_state(source)
    heading_target, kappa_target = edge_end_state(target)
    # Leaving through the target stub reverses its direction and curvature sign.
    heading_out = wrap_angle(heading_target + math.pi)
    kappa_out = -kappa_target
    state = (float(start[0]), float(start[1]), heading_in)

    curve: Optional[StructureCurve] = None
    try:
        length0, fractions, shape = _stroke_profile(source, target, start, end, heading_in, heading_out, cfg)
        interior = slice(1, -1)
        tilt = 2.0 * fractions[interior] - 1.0

        def profile(params) -> Tuple[np.ndarray, np.ndarray]:
            length, offset, shear = params
            knots = shape.copy()
            knots[0], knots[-1] = kappa_in, kappa_out
            knots[interior] += offset + shear * tilt
            return fractions * length, knots

        def residuals(params):
            positions, knots = profile(params)
            _, points, phis, _ = integrate_chain(state, positions, knots, cfg.curve_step)
            return np.array([
                points[-1, 0] - end[0],
                points[-1, 1] - end[1],
                chord * wrap_angle(phis[-1] - heading_out),
            ])

        solution = least_squares(
            residuals,
            x0=np.array([min(max(length0, 0.5 * chord), 4.0 * chord + 10.0), 0.0, 0.0]),
            bounds=([0.5 * chord, -np.inf, -np.inf], [4.0 * chord + 10.0, np.inf, np.inf]),
            max_nfev=cfg.curve_max_iterations,
            xtol=1e-12,
            ftol=1e-12,
            gtol=1e-12,
        )
        positions, knots = profile(solution.x)
        arc, points, phis, segments = integrate_chain(state, positions, knots, cfg.curve_step)
        miss = math.hypot(points[-1, 0] - end[0], points[-1, 1] - end[1])
        heading_miss = abs(wrap_angle(phis[-1] - heading_out))
        if miss <= cfg.curve_endpoint_tolerance and heading_miss <= _HEADING_TOLERANCE:
            if _inside_allowed(points, _allowed_region(mask)):
                curve = StructureCurve(
                    source_edge_id=source.id,
                    target_edge_id=target.id,
                    samples=points,
                    arc=arc,
                    headings=phis,
                    curvature_profile=np.stack([positions, knots], axis=1),
                    segments=segments,
                )
            else:
                logger.warning("Curve %d->%d leaves the target region", source.id, target.id)
        else:
            logger.warning(
                "Curve %d->%d missed its endpoint by %.3f px (heading %.4f rad)",
                source.id, target.id, miss, heading_miss,
            )
    except (ValueError, FloatingPointError) as exc:
        logger.warning("Curve fit %d->%d failed: %s", source.id, target.id, exc)

    if curve is None:
        points, arc, headings, profile_knots = hermite_bridge(
            start, end, heading_in, heading_out, mask, cfg.curve_step
        )
        curve = StructureCurve(
            source_edge_id=source.id,
            target_edge_id=target.id,
            samples=points,
            arc=arc,
            headings=headings,
            curvature_profile=profile_knots,
            fallback=True,
        )
    logger.debug(
        "Curve %d->%d: length %.2f px, %d samples, fallback=%s",
        source.id, target.id, curve.length, curve.samples.shape[0], curve.fallback,
    )
    return curve
