"""Command-line client for the laboratory.

Every subcommand reads a JSON config (--config), validates it into the
same request models the HTTP service uses, runs in-process by default
or against a running service (--server URL), and writes its outputs
plus a manifest.json echoing the resolved config into --out.

Exit codes: 0 success, 1 failed verification (a failure.json with the
reason is written next to the outputs) or transport error, 2 bad
usage or config. Thread count (--threads / SHIFTLAB_THREADS) changes
wall time only, never bytes, and is deliberately absent from the
manifest.
"""

from __future__ import annotations

import base64
import json
import sys
from pathlib import Path

import click
from pydantic import ValidationError

from . import __version__
from .service import models as sm
from .service import runners as sr

_REQUESTS = {
    "orbit": sm.OrbitRequest,
    "entropy": sm.EntropyRequest,
    "certify": sm.CertifyRequest,
    "jtable": sm.JTableRequest,
    "words": sm.WordsRequest,
    "wandering": sm.WanderingRequest,
    "render": sm.RenderRequest,
}

_RESPONSES = {
    "orbit": sm.OrbitResponse,
    "entropy": sm.EntropyResponse,
    "certify": sm.CertifyResponse,
    "jtable": sm.JTableResponse,
    "words": sm.WordsResponse,
    "wandering": sm.WanderingResponse,
    "render": sm.RenderResponse,
}


def _dump(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _write_render_files(out: Path, render: sm.RenderResponse, stem: str = "basin"):
    (out / f"{stem}.csv").write_text(render.csv)
    (out / f"{stem}.ppm").write_bytes(base64.b64decode(render.ppm_b64))


def _render_summary(render: sm.RenderResponse) -> dict:
    doc = render.model_dump(mode="json")
    doc.pop("csv")
    doc.pop("ppm_b64")
    return doc


def _write_outputs(command: str, resp, out: Path) -> dict | None:
    """Write the command's files; return a failure document or None."""
    if command == "orbit":
        doc = resp.model_dump(mode="json")
        csv = doc.pop("csv")
        (out / "orbit.json").write_text(_dump(doc))
        (out / "orbit.csv").write_text(csv)
        return None
    if command == "entropy":
        doc = resp.model_dump(mode="json")
        csv = doc.pop("csv")
        (out / "entropy.json").write_text(_dump(doc))
        (out / "entropy.csv").write_text(csv)
        return None
    if command == "certify":
        (out / "certificate.json").write_text(_dump(resp.model_dump(mode="json")))
        if not resp.valid:
            return {
                "command": command,
                "reason": "certificate invalid: modulus or winding condition failed",
                "min_modulus": resp.min_modulus,
                "threshold": resp.threshold,
                "degree": resp.degree,
                "conclusive": resp.conclusive,
            }
        return None
    if command == "jtable":
        (out / "jtable.json").write_text(_dump(resp.model_dump(mode="json")))
        if not resp.passed:
            return {
                "command": command,
                "reason": "minimum cell cardinality below k - 2",
                "min_cardinality": resp.min_cardinality,
                "required": resp.required,
            }
        return None
    if command == "words":
        (out / "words.json").write_text(_dump(resp.model_dump(mode="json")))
        return None
    if command == "wandering":
        doc = resp.model_dump(mode="json")
        if resp.render is not None:
            doc["render"] = _render_summary(resp.render)
            _write_render_files(out, resp.render)
        (out / "wandering.json").write_text(_dump(doc))
        if not resp.passed:
            return {
                "command": command,
                "reason": "identity residuals exceeded tolerance",
                "base_residual": resp.identities.base_residual,
                "commute_residual": resp.identities.commute_residual,
                "ladder_residual": resp.identities.ladder_residual,
                "tol": resp.identities.tol,
            }
        return None
    if command == "render":
        (out / "render.json").write_text(_dump(_render_summary(resp)))
        _write_render_files(out, resp)
        return None
    raise AssertionError(f"unknown command {command}")


def _execute(command: str, config_path, seed, threads, out_dir, server):
    cfg = {}
    if config_path is not None:
        try:
            cfg = json.loads(Path(config_path).read_text())
        except json.JSONDecodeError as err:
            raise click.UsageError(f"config is not valid JSON: {err}") from err
        if not isinstance(cfg, dict):
            raise click.UsageError("config must be a JSON object")
    model = _REQUESTS[command]
    if seed is not None and "seed" in model.model_fields:
        cfg["seed"] = seed
    try:
        req = model.model_validate(cfg)
    except ValidationError as err:
        raise click.UsageError(f"invalid config for {command}:\n{err}") from err

    if server is not None:
        import httpx

        try:
            reply = httpx.post(
                f"{server.rstrip('/')}/v1/{command}",
                json=req.model_dump(mode="json"),
                timeout=600.0,
            )
        except httpx.HTTPError as err:
            raise click.ClickException(f"service unreachable: {err}") from err
        if reply.status_code == 400:
            raise click.UsageError(f"service rejected config: {reply.json()['detail']}")
        if reply.status_code != 200:
            raise click.ClickException(f"service error {reply.status_code}: {reply.text}")
        resp = _RESPONSES[command].model_validate(reply.json())
    else:
        try:
            resp = sr.RUNNERS[command](req, threads=max(1, threads or 1))
        except (ValueError, ArithmeticError) as err:
            raise click.UsageError(str(err)) from err

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(
        _dump(
            {
                "command": command,
                "config": req.model_dump(mode="json"),
                "version": __version__,
            }
        )
    )
    failure = _write_outputs(command, resp, out)
    if failure is not None:
        (out / "failure.json").write_text(_dump(failure))
        click.echo(f"{command}: FAILED ({failure['reason']})", err=True)
        sys.exit(1)


def _common(fn):
    for opt in reversed(
        [
            click.option(
                "--config",
                "config_path",
                type=click.Path(exists=True, dir_okay=False),
                default=None,
                help="JSON config file (defaults apply when omitted).",
            ),
            click.option("--seed", type=int, default=None, help="Override the config seed."),
            click.option(
                "--threads",
                type=int,
                default=None,
                envvar="SHIFTLAB_THREADS",
                help="Worker processes; affects wall time only.",
            ),
            click.option(
                "--out",
                "out_dir",
                type=click.Path(file_okay=False),
                default=".",
                help="Output directory.",
            ),
            click.option(
                "--server",
                default=None,
                help="Base URL of a running service; runs in-process when omitted.",
            ),
        ]
    ):
        fn = opt(fn)
    return fn


@click.group()
@click.version_option(__version__, prog_name="shiftlab")
def main():
    """Numerical laboratory for shift-like maps on C^N."""


@main.command()
@_common
def orbit(config_path, seed, threads, out_dir, server):
    """Iterate a map and write the orbit as CSV and JSON."""
    _execute("orbit", config_path, seed, threads, out_dir, server)


@main.command()
@_common
def entropy(config_path, seed, threads, out_dir, server):
    """Separated/covering entropy estimates on the quotient box."""
    _execute("entropy", config_path, seed, threads, out_dir, server)


@main.command()
@_common
def certify(config_path, seed, threads, out_dir, server):
    """Expansion certificate on a circle; exits 1 when invalid."""
    _execute("certify", config_path, seed, threads, out_dir, server)


@main.command()
@_common
def jtable(config_path, seed, threads, out_dir, server):
    """Build the preimage transition table; exits 1 below k-2."""
    _execute("jtable", config_path, seed, threads, out_dir, server)


@main.command()
@_common
def words(config_path, seed, threads, out_dir, server):
    """Count admissible words and their growth rate."""
    _execute("words", config_path, seed, threads, out_dir, server)


@main.command()
@_common
def wandering(config_path, seed, threads, out_dir, server):
    """Verify the ladder example's identities and spectrum."""
    _execute("wandering", config_path, seed, threads, out_dir, server)


@main.command()
@_common
def render(config_path, seed, threads, out_dir, server):
    """Rasterize basins on a planar slice (PPM + CSV)."""
    _execute("render", config_path, seed, threads, out_dir, server)


if __name__ == "__main__":
    main()
