"""Shift-like maps on C^N and the collapsed-boundary quotient box.

A shift-like map of type nu sends (z_1, ..., z_N) to
(z_2, ..., z_N, f(z_{N-nu+1}) - a z_1) for an entire f and a != 0.
It is a polynomial-or-transcendental automorphism of C^N whose inverse
is again explicit, and whose Jacobian determinant is the constant
(-1)^N a.

The quotient box identifies the outgoing boundary slab of a closed
polydisk (the faces met by the trailing nu coordinates) to a single
class; nu-fold application of the map descends to the quotient with
everything that leaves the open polydisk sent to that class. Distances
on C^N are coordinatewise sup of complex moduli throughout.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .expressions import (
    EntireFunction,
    EvaluationRangeError,
    evaluate,
    evaluate_grid,
    parse_text,
    rescale,
    to_text,
)

Point = tuple[complex, ...]


def as_point(z, n_dim: int | None = None) -> Point:
    pt = tuple(complex(w) for w in z)
    if len(pt) < 2:
        raise ValueError("points need at least two coordinates")
    if n_dim is not None and len(pt) != n_dim:
        raise ValueError(f"expected {n_dim} coordinates, got {len(pt)}")
    return pt


def sup_dist(z: Point, w: Point) -> float:
    if len(z) != len(w):
        raise ValueError("dimension mismatch")
    return max(abs(a - b) for a, b in zip(z, w))


def sup_norm(z: Point) -> float:
    return max(abs(a) for a in z)


@dataclass(frozen=True)
class ShiftLikeMap:
    """Shift-like automorphism of C^n_dim with shift type `shift`."""

    n_dim: int
    shift: int
    a: complex
    f: EntireFunction

    def __post_init__(self):
        if self.n_dim < 2:
            raise ValueError("n_dim must be at least 2")
        if not 1 <= self.shift <= self.n_dim - 1:
            raise ValueError("shift type must lie in 1..n_dim-1")
        object.__setattr__(self, "a", complex(self.a))
        if self.a == 0:
            raise ValueError("coefficient a must be nonzero")

    @cached_property
    def f_prime(self) -> EntireFunction:
        return self.f.derivative()

    @property
    def feed_index(self) -> int:
        """0-based index of the coordinate fed to f (z_{N-nu+1})."""
        return self.n_dim - self.shift

    def apply(self, z) -> Point:
        z = as_point(z, self.n_dim)
        tail = evaluate(self.f, z[self.feed_index]) - self.a * z[0]
        return z[1:] + (tail,)

    def apply_inverse(self, w) -> Point:
        w = as_point(w, self.n_dim)
        # The feed coordinate of the preimage is w[feed_index - 1]
        # because every coordinate shifts down by one; feed_index >= 1.
        head = (evaluate(self.f, w[self.feed_index - 1]) - w[-1]) / self.a
        return (head,) + w[:-1]

    def apply_grid(self, zs: np.ndarray) -> np.ndarray:
        """Apply to an (..., n_dim) array of points in one shot."""
        zs = np.asarray(zs, dtype=complex)
        if zs.shape[-1] != self.n_dim:
            raise ValueError("dimension mismatch")
        out = np.empty_like(zs)
        out[..., :-1] = zs[..., 1:]
        with np.errstate(all="ignore"):
            out[..., -1] = (
                evaluate_grid(self.f, zs[..., self.feed_index]) - self.a * zs[..., 0]
            )
        return out

    def jacobian(self, z) -> np.ndarray:
        z = as_point(z, self.n_dim)
        n = self.n_dim
        jac = np.zeros((n, n), dtype=complex)
        jac[np.arange(n - 1), np.arange(1, n)] = 1.0
        jac[n - 1, 0] = -self.a
        jac[n - 1, self.feed_index] = evaluate(self.f_prime, z[self.feed_index])
        return jac

    def tangent_apply_grid(self, zs: np.ndarray, vs: np.ndarray) -> np.ndarray:
        """Push tangent vectors vs at points zs through the Jacobian."""
        zs = np.asarray(zs, dtype=complex)
        vs = np.asarray(vs, dtype=complex)
        out = np.empty_like(vs)
        out[..., :-1] = vs[..., 1:]
        with np.errstate(all="ignore"):
            slope = evaluate_grid(self.f_prime, zs[..., self.feed_index])
            out[..., -1] = slope * vs[..., self.feed_index] - self.a * vs[..., 0]
        return out


@dataclass(frozen=True)
class Orbit:
    start: Point
    samples: list[Point]
    escaped_at: int | None


def iterate(F: ShiftLikeMap, z, steps: int, escape_radius: float = 1e6) -> Orbit:
    """Forward orbit with escape detection.

    samples[0] is the start point; iteration stops early once the sup
    norm exceeds escape_radius (the escaping sample is kept) or the
    map overflows, which counts as an escape at the last finite sample.
    """
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    cur = as_point(z, F.n_dim)
    samples = [cur]
    escaped_at = None
    for j in range(steps):
        try:
            cur = F.apply(cur)
        except EvaluationRangeError:
            escaped_at = j
            break
        samples.append(cur)
        if sup_norm(cur) > escape_radius:
            escaped_at = j + 1
            break
    return Orbit(start=samples[0], samples=samples, escaped_at=escaped_at)


def dilation_conjugate(F: ShiftLikeMap, n: int) -> ShiftLikeMap:
    """The member F_n with f replaced by f(n z)/n.

    Conjugation by the dilation z -> n z carries F_n back to F.
    """
    return ShiftLikeMap(F.n_dim, F.shift, F.a, rescale(F.f, n))


def map_to_json(F: ShiftLikeMap) -> str:
    doc = {
        "N": F.n_dim,
        "nu": F.shift,
        "a": [F.a.real, F.a.imag],
        "f": to_text(F.f),
    }
    return json.dumps(doc, sort_keys=True)


def map_from_json(text: str) -> ShiftLikeMap:
    doc = json.loads(text)
    a = doc["a"]
    return ShiftLikeMap(
        n_dim=int(doc["N"]),
        shift=int(doc["nu"]),
        a=complex(float(a[0]), float(a[1])),
        f=parse_text(doc["f"]),
    )


def orbit_to_csv(orbit: Orbit) -> str:
    n = len(orbit.start)
    buf = io.StringIO()
    cols = ",".join(f"re{i+1},im{i+1}" for i in range(n))
    buf.write(f"step,{cols},escaped\n")
    for j, pt in enumerate(orbit.samples):
        esc = 1 if orbit.escaped_at is not None and j >= orbit.escaped_at else 0
        vals = ",".join(f"{w.real!r},{w.imag!r}" for w in pt)
        buf.write(f"{j},{vals},{esc}\n")
    return buf.getvalue()


# Quotient box -------------------------------------------------------


@dataclass(frozen=True)
class QuotientBox:
    """Closed polydisk of polyradius r with the outgoing slab collapsed.

    The outgoing slab consists of the points of the closed box whose
    trailing `shift` coordinates meet the boundary circle; all of it is
    one class, and it absorbs every orbit that leaves the open box.
    """

    radius: float
    n_dim: int
    shift: int

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.n_dim < 2 or not 1 <= self.shift <= self.n_dim - 1:
            raise ValueError("bad quotient box dimensions")

    def contains_closed(self, z: Point) -> bool:
        return all(abs(w) <= self.radius for w in z)

    def on_outgoing_slab(self, z: Point) -> bool:
        return any(abs(w) >= self.radius for w in z[self.n_dim - self.shift :])

    def slab_distance(self, z: Point) -> float:
        """Sup-metric distance from z to the outgoing slab."""
        gaps = [self.radius - abs(w) for w in z[self.n_dim - self.shift :]]
        return max(min(gaps), 0.0)


@dataclass(frozen=True)
class QuotientClass:
    """A class of the quotient box; point is None for the collapsed class."""

    point: Point | None

    @property
    def collapsed(self) -> bool:
        return self.point is None


COLLAPSED = QuotientClass(None)


def quotient_project(box: QuotientBox, z) -> QuotientClass:
    z = as_point(z, box.n_dim)
    if not box.contains_closed(z):
        raise ValueError("point lies outside the closed box")
    if box.on_outgoing_slab(z):
        return COLLAPSED
    return QuotientClass(z)


def quotient_metric(box: QuotientBox, c1: QuotientClass, c2: QuotientClass) -> float:
    """Quotient pseudo-metric: the plain sup distance shortcut through
    the collapsed class is allowed, so the value is the minimum of the
    direct distance and both slab distances.

    This min form need not satisfy the triangle inequality; use
    quotient_triangle_report to probe a configuration.
    """
    if c1.collapsed and c2.collapsed:
        return 0.0
    if c1.collapsed:
        return box.slab_distance(c2.point)
    if c2.collapsed:
        return box.slab_distance(c1.point)
    direct = sup_dist(c1.point, c2.point)
    return min(direct, box.slab_distance(c1.point), box.slab_distance(c2.point))


def quotient_apply(box: QuotientBox, F: ShiftLikeMap, c: QuotientClass) -> QuotientClass:
    """One quotient step: apply F `shift` times, collapsing on exit.

    The collapsed class is fixed. A representative whose nu-fold image
    leaves the open box (including landing on its boundary) collapses.
    """
    if (F.n_dim, F.shift) != (box.n_dim, box.shift):
        raise ValueError("map and box dimensions do not match")
    if c.collapsed:
        return COLLAPSED
    cur = c.point
    for _ in range(box.shift):
        try:
            cur = F.apply(cur)
        except EvaluationRangeError:
            return COLLAPSED
    if any(abs(w) >= box.radius for w in cur):
        return COLLAPSED
    return QuotientClass(cur)


def quotient_orbit_array(
    box: QuotientBox, F: ShiftLikeMap, points: np.ndarray, steps: int
):
    """Quotient orbits of many points at once.

    Returns (samples, collapsed): samples has shape (M, steps, n_dim)
    and collapsed (M, steps) marks entries that have hit the collapsed
    class (their sample rows are zeroed and must be ignored).
    samples[:, 0] is the projection of the input points, which must lie
    in the closed box.
    """
    pts = np.asarray(points, dtype=complex)
    if pts.ndim != 2 or pts.shape[1] != box.n_dim:
        raise ValueError("points must be an (M, n_dim) array")
    if steps < 1:
        raise ValueError("steps must be at least 1")
    mods = np.abs(pts)
    if (mods > box.radius).any():
        raise ValueError("grid points must lie in the closed box")
    m = pts.shape[0]
    samples = np.zeros((m, steps, box.n_dim), dtype=complex)
    collapsed = np.zeros((m, steps), dtype=bool)

    dead = (mods[:, box.n_dim - box.shift :] >= box.radius).any(axis=1)
    cur = np.where(dead[:, None], 0.0, pts)
    samples[:, 0] = cur
    collapsed[:, 0] = dead
    for j in range(1, steps):
        nxt = cur
        for _ in range(box.shift):
            nxt = F.apply_grid(nxt)
        with np.errstate(invalid="ignore"):
            inside = np.isfinite(nxt).all(axis=1) & (
                np.abs(nxt) < box.radius
            ).all(axis=1)
        dead = dead | ~inside
        cur = np.where(dead[:, None], 0.0, nxt)
        samples[:, j] = cur
        collapsed[:, j] = dead
    return samples, collapsed


def quotient_triangle_report(
    box: QuotientBox, triples: list[tuple[QuotientClass, QuotientClass, QuotientClass]]
) -> dict:
    """Probe the triangle inequality for the quotient pseudo-metric.

    Returns counts and the worst violation ratio d(x,z)/(d(x,y)+d(y,z));
    the min form genuinely violates the inequality when a shortcut
    through the slab undercuts two far-apart interior points.
    """
    checked = 0
    violations = 0
    worst = 1.0
    witness = None
    for x, y, z in triples:
        dxz = quotient_metric(box, x, z)
        through = quotient_metric(box, x, y) + quotient_metric(box, y, z)
        checked += 1
        if dxz > through + 1e-12:
            violations += 1
            ratio = dxz / through if through > 0 else float("inf")
            if ratio > worst:
                worst = ratio
                witness = (x, y, z)
    return {
        "checked": checked,
        "violations": violations,
        "worst_ratio": worst,
        "witness": witness,
    }
