"""Command implementations shared by the HTTP app and the CLI.

Each runner takes a validated request model and returns a response
model; everything the CLI writes to disk (CSV text, PPM bytes) is a
field of the response, so the in-process path and the thin-client
path produce identical files. Thread counts are plumbing, not config:
they arrive as a separate argument and never enter a response.
"""

from __future__ import annotations

import base64
import math

import numpy as np

from .. import entropy as ent
from .. import expressions as ex
from .. import shiftlike as sh
from .. import wandering as wd
from .. import winding as wi
from .models import (
    CertifyRequest,
    CertifyResponse,
    EntropyRequest,
    EntropyResponse,
    EntropyRow,
    IdentityBlock,
    JTableRequest,
    JTableResponse,
    MapSpec,
    OrbitRequest,
    OrbitResponse,
    ProbeRequest,
    ProbeResponse,
    ProbeRowModel,
    RenderRequest,
    RenderResponse,
    SliceParams,
    SpectrumBlock,
    SweepBlock,
    WanderingMapSpec,
    WanderingRequest,
    WanderingResponse,
    WordCountRow,
    WordsRequest,
    WordsResponse,
    from_pair,
    to_pair,
)


def _finite_or_none(x: float | None) -> float | None:
    if x is None or not math.isfinite(x):
        return None
    return x


def _resolve_map(spec: MapSpec | WanderingMapSpec) -> sh.ShiftLikeMap:
    if isinstance(spec, WanderingMapSpec):
        return wd.build_example(spec.wandering).map
    return sh.ShiftLikeMap(
        n_dim=spec.N,
        shift=spec.nu,
        a=from_pair(spec.a),
        f=ex.parse_text(spec.f),
    )


def run_orbit(req: OrbitRequest, threads: int = 1) -> OrbitResponse:
    F = _resolve_map(req.map)
    start = tuple(from_pair(p) for p in req.start)
    orbit = sh.iterate(F, start, req.steps, escape_radius=req.escape_radius)
    return OrbitResponse(
        samples=[[to_pair(w) for w in pt] for pt in orbit.samples],
        escaped_at=orbit.escaped_at,
        csv=sh.orbit_to_csv(orbit),
    )


def run_entropy(req: EntropyRequest, threads: int = 1) -> EntropyResponse:
    F = _resolve_map(req.map)
    box = sh.QuotientBox(radius=req.box_radius, n_dim=F.n_dim, shift=F.shift)
    grid = ent.real_axis_grid(box, req.per_axis)
    report = ent.entropy_estimate(
        box,
        F,
        grid,
        req.n_values,
        req.epsilons,
        with_covering=req.with_covering,
        surviving_only=req.surviving_only,
    )
    rows = [
        EntropyRow(
            n=r.n,
            epsilon=r.epsilon,
            separated=r.separated,
            covering=r.covering,
            h_lower=_finite_or_none(r.h_lower),
            h_upper=_finite_or_none(r.h_upper),
        )
        for r in report.rows
    ]
    return EntropyResponse(
        rows=rows,
        grid_size=report.grid_size,
        grid_resolution=report.grid_resolution,
        monotonicity_violations=list(report.monotonicity_violations),
        csv=report.to_csv(),
    )


def run_certify(req: CertifyRequest, threads: int = 1) -> CertifyResponse:
    cert = wi.horseshoe_certificate(
        ex.parse_text(req.f), from_pair(req.a), req.r, min_samples=req.min_samples
    )
    return CertifyResponse(
        min_modulus=cert.min_modulus,
        threshold=cert.threshold,
        degree=cert.degree,
        valid=cert.valid,
        conclusive=cert.conclusive,
        entropy_lower=_finite_or_none(cert.entropy_lower),
        samples=cert.samples,
    )


def run_jtable(req: JTableRequest, threads: int = 1) -> JTableResponse:
    table = wi.build_transition_table(
        ex.parse_text(req.f),
        from_pair(req.a),
        [from_pair(c) for c in req.centers],
        req.r,
        req.R,
        n_r=req.n_r,
        n_theta=req.n_theta,
        threads=threads,
    )
    min_card = wi.transition_min_cardinality(table)
    required = max(table.k - 2, 0)
    return JTableResponse(
        k=table.k,
        centers=[to_pair(c) for c in table.centers],
        r=table.small_radius,
        R=table.big_radius,
        a=to_pair(table.a),
        allowed=[[list(cell) for cell in row] for row in table.allowed],
        inconclusive=[[list(cell) for cell in row] for row in table.inconclusive],
        min_cardinality=min_card,
        dominated=list(wi.dominated_cells(table)),
        required=required,
        passed=min_card >= required,
    )


def run_words(req: WordsRequest, threads: int = 1) -> WordsResponse:
    table = req.table if req.table is not None else ent.uniform_excluded_table(req.k, req.excluded)
    counts = [
        ent.count_admissible_words(table, req.N, req.nu, m) for m in sorted(set(req.lengths))
    ]
    top = max(sorted(set(req.lengths)))
    lower = None
    if top >= 2:
        lower = _finite_or_none(ent.symbolic_entropy_lower(table, req.N, req.nu, top))
    return WordsResponse(
        counts=[
            WordCountRow(
                m=wc.length,
                count=str(wc.count),
                growth_rate=_finite_or_none(wc.growth_rate),
            )
            for wc in counts
        ],
        entropy_lower=lower,
    )


def run_probe(req: ProbeRequest, threads: int = 1) -> ProbeResponse:
    report = wi.rescaled_family_probe(
        ex.parse_text(req.f),
        req.r,
        req.R,
        req.degree,
        req.n_start,
        req.n_end,
        min_samples=req.min_samples,
    )
    return ProbeResponse(
        rows=[
            ProbeRowModel(
                n=r.n,
                min_modulus=r.min_modulus,
                winding=r.winding,
                conclusive=r.conclusive,
                passed=r.passed,
            )
            for r in report.rows
        ],
        first_passing=report.first_passing,
        degree=report.degree,
        csv=report.to_csv(),
    )


def _run_slice(wm: wd.WanderingMap, params: SliceParams, threads: int) -> RenderResponse:
    spec = wd.SliceSpec(
        axis_u=params.axis_u,
        axis_v=params.axis_v,
        u_range=params.u_range,
        v_range=params.v_range,
        fixed_value=from_pair(params.fixed),
    )
    grid = wd.render_basin_slice(
        wm,
        spec,
        width=params.width,
        height=params.height,
        max_iter=params.max_iter,
        conv_tol=params.conv_tol,
        escape_radius=params.escape_radius,
        threads=threads,
    )
    return RenderResponse(
        width=grid.width,
        height=grid.height,
        histogram=grid.histogram(),
        distinct_basins=len(grid.basin_indices()),
        csv=grid.to_csv(),
        ppm_b64=base64.b64encode(grid.to_ppm()).decode("ascii"),
    )


def run_render(req: RenderRequest, threads: int = 1) -> RenderResponse:
    wm = wd.build_example(req.a)
    return _run_slice(wm, req.slice, threads)


def run_wandering(req: WanderingRequest, threads: int = 1) -> WanderingResponse:
    wm = wd.build_example(req.a)
    rep = wd.verify_identities(wm, samples=req.samples, tol=req.tol, seed=req.seed)
    spec = wd.fixed_point_spectrum(wm, req.spectrum_anchor)
    sweep = None
    if req.sweep:
        sw = wd.attracting_range_sweep(req.sweep_samples)
        sweep = SweepBlock(
            values=list(sw.values), radii=list(sw.radii), crossing=sw.crossing
        )
    render = None
    if req.render is not None:
        render = _run_slice(wm, req.render, threads)
    return WanderingResponse(
        a=wm.a,
        sign=wm.sign,
        alpha=wm.offset.value,
        alpha_residual=wm.offset.residual,
        identities=IdentityBlock(
            base_residual=rep.base_residual,
            commute_residual=rep.commute_residual,
            ladder_residual=rep.ladder_residual,
            samples=rep.samples,
            tol=rep.tol,
            seed=rep.seed,
            passed=rep.passed,
        ),
        spectrum=SpectrumBlock(
            anchor=spec.anchor,
            eigenvalues=[to_pair(w) for w in spec.eigenvalues],
            radius=spec.radius,
            attracting=spec.attracting,
        ),
        sweep=sweep,
        render=render,
        passed=rep.passed,
    )


RUNNERS = {
    "orbit": run_orbit,
    "entropy": run_entropy,
    "certify": run_certify,
    "jtable": run_jtable,
    "words": run_words,
    "probe": run_probe,
    "render": run_render,
    "wandering": run_wandering,
}
