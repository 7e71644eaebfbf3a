"""HTTP face of the laboratory.

One POST endpoint per command under /v1, all sharing the runner layer
with the CLI. Bad parameters (geometry violations, unparseable
expression text, guard overflows) surface as 400 with the message;
anything else is a 500 and a bug.
"""

from __future__ import annotations

import os

from fastapi import FastAPI, HTTPException

from .. import __version__
from . import runners
from .models import (
    CertifyRequest,
    CertifyResponse,
    EntropyRequest,
    EntropyResponse,
    HealthResponse,
    JTableRequest,
    JTableResponse,
    OrbitRequest,
    OrbitResponse,
    ProbeRequest,
    ProbeResponse,
    RenderRequest,
    RenderResponse,
    WanderingRequest,
    WanderingResponse,
    WordsRequest,
    WordsResponse,
)

app = FastAPI(title="shiftlab", version=__version__)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("SHIFTLAB_THREADS", "1")))
    except ValueError:
        return 1


def _guarded(runner, req):
    try:
        return runner(req, threads=_threads())
    except (ValueError, ArithmeticError) as err:
        raise HTTPException(status_code=400, detail=str(err)) from err


@app.get("/v1/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/v1/orbit", response_model=OrbitResponse)
def orbit(req: OrbitRequest) -> OrbitResponse:
    return _guarded(runners.run_orbit, req)


@app.post("/v1/entropy", response_model=EntropyResponse)
def entropy(req: EntropyRequest) -> EntropyResponse:
    return _guarded(runners.run_entropy, req)


@app.post("/v1/certify", response_model=CertifyResponse)
def certify(req: CertifyRequest) -> CertifyResponse:
    return _guarded(runners.run_certify, req)


@app.post("/v1/jtable", response_model=JTableResponse)
def jtable(req: JTableRequest) -> JTableResponse:
    return _guarded(runners.run_jtable, req)


@app.post("/v1/words", response_model=WordsResponse)
def words(req: WordsRequest) -> WordsResponse:
    return _guarded(runners.run_words, req)


@app.post("/v1/probe", response_model=ProbeResponse)
def probe(req: ProbeRequest) -> ProbeResponse:
    return _guarded(runners.run_probe, req)


@app.post("/v1/render", response_model=RenderResponse)
def render(req: RenderRequest) -> RenderResponse:
    return _guarded(runners.run_render, req)


@app.post("/v1/wandering", response_model=WanderingResponse)
def wandering(req: WanderingRequest) -> WanderingResponse:
    return _guarded(runners.run_wandering, req)
