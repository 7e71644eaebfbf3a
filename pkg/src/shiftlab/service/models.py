"""Request/response schemas for the service and the CLI.

Complex numbers travel as [re, im] pairs. Exact big integers (word
counts) travel as decimal strings. Infinities never appear: fields
that could be -inf are null instead. Request models reject unknown
keys so config typos fail loudly instead of silently running defaults.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

ComplexPair = tuple[float, float]


def to_pair(z: complex) -> ComplexPair:
    return (float(z.real), float(z.imag))


def from_pair(p) -> complex:
    return complex(p[0], p[1])


class _Req(BaseModel):
    model_config = ConfigDict(extra="forbid")


class MapSpec(_Req):
    """Explicit shift-like map: {"N": 3, "nu": 1, "a": [re, im], "f": text}."""

    N: int
    nu: int
    a: ComplexPair
    f: str


class WanderingMapSpec(_Req):
    """Shorthand for the built-in three-dimensional ladder example."""

    wandering: float = Field(default=0.25, description="coupling a in (0,1)")


class OrbitRequest(_Req):
    map: MapSpec | WanderingMapSpec
    start: list[ComplexPair]
    steps: int = 10
    escape_radius: float = 1e6


class OrbitResponse(BaseModel):
    samples: list[list[ComplexPair]]
    escaped_at: int | None
    csv: str


class EntropyRequest(_Req):
    map: MapSpec | WanderingMapSpec
    box_radius: float = 1.0
    per_axis: int = 40
    n_values: list[int] = [2, 4]
    epsilons: list[float] = [0.2, 0.1]
    with_covering: bool = False
    surviving_only: bool = False


class EntropyRow(BaseModel):
    n: int
    epsilon: float
    separated: int
    covering: int | None
    h_lower: float | None
    h_upper: float | None


class EntropyResponse(BaseModel):
    rows: list[EntropyRow]
    grid_size: int
    grid_resolution: float
    monotonicity_violations: list[str]
    csv: str


class CertifyRequest(_Req):
    f: str
    a: ComplexPair
    r: float
    min_samples: int = 8192


class CertifyResponse(BaseModel):
    min_modulus: float
    threshold: float
    degree: int | None
    valid: bool
    conclusive: bool
    entropy_lower: float | None
    samples: int


class JTableRequest(_Req):
    f: str
    a: ComplexPair
    centers: list[ComplexPair]
    r: float
    R: float
    n_r: int = 21
    n_theta: int = 21


class JTableResponse(BaseModel):
    k: int
    centers: list[ComplexPair]
    r: float
    R: float
    a: ComplexPair
    allowed: list[list[list[int]]]
    inconclusive: list[list[list[int]]]
    min_cardinality: int
    dominated: list[tuple[int, int]]
    required: int
    passed: bool


class WordsRequest(_Req):
    table: list[list[list[int]]] | None = None
    k: int | None = None
    excluded: int = 2
    N: int = 3
    nu: int = 1
    lengths: list[int] = [4, 6, 8, 10, 12]

    @model_validator(mode="after")
    def _one_source(self):
        if (self.table is None) == (self.k is None):
            raise ValueError("provide exactly one of 'table' or 'k'")
        return self


class WordCountRow(BaseModel):
    m: int
    count: str
    growth_rate: float | None


class WordsResponse(BaseModel):
    counts: list[WordCountRow]
    entropy_lower: float | None


class ProbeRequest(_Req):
    f: str
    r: float
    R: float
    degree: int
    n_start: int = 1
    n_end: int = 60
    min_samples: int = 4096


class ProbeRowModel(BaseModel):
    n: int
    min_modulus: float
    winding: int | None
    conclusive: bool
    passed: bool


class ProbeResponse(BaseModel):
    rows: list[ProbeRowModel]
    first_passing: int | None
    degree: int
    csv: str


class SliceParams(_Req):
    axis_u: int = 0
    axis_v: int = 2
    u_range: tuple[float, float] = (-4.0, 4.0)
    v_range: tuple[float, float] = (-4.0, 4.0)
    fixed: ComplexPair = (0.0, 0.0)
    width: int = 200
    height: int = 200
    max_iter: int = 500
    conv_tol: float = 1e-9
    escape_radius: float = 1e6


class RenderRequest(_Req):
    a: float = 0.25
    slice: SliceParams = SliceParams()


class RenderResponse(BaseModel):
    width: int
    height: int
    histogram: dict[str, int]
    distinct_basins: int
    csv: str
    ppm_b64: str


class WanderingRequest(_Req):
    a: float = 0.25
    samples: int = 10000
    tol: float = 1e-10
    seed: int = 0
    spectrum_anchor: int = 0
    sweep: bool = False
    sweep_samples: int = 33
    render: SliceParams | None = None


class IdentityBlock(BaseModel):
    base_residual: float
    commute_residual: float
    ladder_residual: float
    samples: int
    tol: float
    seed: int
    passed: bool


class SpectrumBlock(BaseModel):
    anchor: int
    eigenvalues: list[ComplexPair]
    radius: float
    attracting: bool


class SweepBlock(BaseModel):
    values: list[float]
    radii: list[float]
    crossing: float | None


class WanderingResponse(BaseModel):
    a: float
    sign: int
    alpha: float
    alpha_residual: float
    identities: IdentityBlock
    spectrum: SpectrumBlock
    sweep: SweepBlock | None
    render: RenderResponse | None
    passed: bool


class HealthResponse(BaseModel):
    status: Literal["ok"]
    version: str
