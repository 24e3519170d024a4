"""Run configuration and report schemas."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from sympy import isprime

from .exceptions import ConfigError

SCHEMA_VERSION = 1

Sign = Literal[1, -1]


class ArrowSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str
    source: str
    target: str


class InvolutionSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    nodes: dict[str, str]
    arrows: dict[str, str] = Field(default_factory=dict)


class QuiverSpec(BaseModel):
    """Raw quiver with involution and duality structure, ids as strings."""

    model_config = ConfigDict(extra="forbid")

    nodes: list[str] = Field(min_length=1)
    arrows: list[ArrowSpec] = Field(default_factory=list)
    sigma: InvolutionSpec
    s: Union[Sign, dict[str, Sign]] = 1
    tau: Union[Sign, dict[str, Sign]] = 1

    @model_validator(mode="after")
    def _check_ids(self) -> "QuiverSpec":
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("node ids must be unique")
        ids = [a.id for a in self.arrows]
        if len(set(ids)) != len(ids):
            raise ValueError("arrow ids must be unique")
        known = set(self.nodes)
        for a in self.arrows:
            if a.source not in known or a.target not in known:
                raise ValueError(f"arrow {a.id} has an endpoint outside the node list")
        return self


class OracleSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    primes: list[int] = Field(default_factory=lambda: [3, 5])
    max_prime: int = Field(13, ge=3, le=13)
    point_cap: int = Field(10**7, ge=1)
    group_cap: int = Field(10**6, ge=1)
    subspace_cap: int = Field(10**5, ge=1)
    workers: int = Field(1, ge=1, le=64)

    @field_validator("primes")
    @classmethod
    def _odd_primes(cls, primes: list[int]) -> list[int]:
        for p in primes:
            if p % 2 == 0 or not isprime(p):
                raise ValueError(f"{p} is not an odd prime")
        return primes

    @model_validator(mode="after")
    def _primes_below_cap(self) -> "OracleSettings":
        too_big = [p for p in self.primes if p > self.max_prime]
        if too_big:
            raise ValueError(f"primes {too_big} exceed max_prime {self.max_prime}")
        return self


StabilitySpec = Union[list[int], dict[str, int]]


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    schema_version: Literal[1] = SCHEMA_VERSION
    quiver: QuiverSpec
    stabilities: dict[str, StabilitySpec] = Field(default_factory=dict)
    bound: int = Field(4, ge=0, le=12)
    oracle: OracleSettings = Field(default_factory=OracleSettings)

    @model_validator(mode="after")
    def _check_stabilities(self) -> "RunConfig":
        for name, theta in self.stabilities.items():
            if isinstance(theta, list) and len(theta) != len(self.quiver.nodes):
                raise ValueError(f"stability {name} has {len(theta)} entries for {len(self.quiver.nodes)} nodes")
            if isinstance(theta, dict):
                unknown = set(theta) - set(self.quiver.nodes)
                if unknown:
                    raise ValueError(f"stability {name} names unknown nodes {sorted(unknown)}")
        return self


def _wrap_validation(exc: ValidationError, source: str) -> ConfigError:
    return ConfigError(
        f"invalid configuration {source}: {exc.error_count()} error(s)",
        errors=json.loads(exc.json()),
    )


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    try:
        return RunConfig.model_validate_json(text)
    except ValidationError as exc:
        raise _wrap_validation(exc, source) from exc


def load_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text, str(path))


def parse_quiver(raw: Union[QuiverSpec, dict[str, Any]]) -> QuiverSpec:
    if isinstance(raw, QuiverSpec):
        return raw
    try:
        return QuiverSpec.model_validate(raw)
    except ValidationError as exc:
        raise _wrap_validation(exc, "quiver") from exc


# reports

class Term(BaseModel):
    dim: list[int]
    value: str


class ErrorBody(BaseModel):
    type: str
    message: str
    details: dict[str, Any] = Field(default_factory=dict)


class ErrorReport(BaseModel):
    command: str
    error: ErrorBody


class ValidateReport(BaseModel):
    command: Literal["validate"] = "validate"
    valid: bool
    nodes: list[str]
    node_partition: dict[str, list[str]]
    arrow_partition: dict[str, list[str]]
    finite_type: bool
    components: list[str]
    duality_class: str
    hyperbolic: Optional[bool] = None


class SeriesReport(BaseModel):
    command: Literal["series"] = "series"
    kind: Literal["total", "semistable", "orientifold"]
    theta: Optional[str] = None
    bound: int
    variable: str
    terms: list[Term]


class Difference(BaseModel):
    dim: list[int]
    left: str
    right: str


class WallcrossReport(BaseModel):
    command: Literal["wallcross"] = "wallcross"
    thetas: list[str]
    bound: int
    equal: bool
    first_difference: Optional[Difference] = None
    summary: str


class OmegaEntry(BaseModel):
    dim: list[int]
    omega: int


class FactorizeReport(BaseModel):
    command: Literal["factorize"] = "factorize"
    theta: str
    bound: int
    orientifold: bool
    omega: list[OmegaEntry]
    sigma_omega: list[OmegaEntry] = Field(default_factory=list)
    finite_type: bool
    sigma_generic: bool
    round_trip: bool
    nonnegative: bool = True
    warnings: list[str] = Field(default_factory=list)


class SectorCount(BaseModel):
    label: str
    points: int
    semistable: int
    group_order: int


class PrimeCount(BaseModel):
    prime: int
    formula: str
    oracle: str
    match: bool
    sectors: list[SectorCount]
    classes: Optional[int] = None


class OracleReport(BaseModel):
    command: Literal["oracle"] = "oracle"
    theta: str
    dim: list[int]
    selfdual: bool
    results: list[PrimeCount]
    match: bool


class DilogReport(BaseModel):
    command: Literal["dilog"] = "dilog"
    identity: str
    bound: int
    equal: bool
    first_difference: Optional[Difference] = None
    summary: str


class DeltaReport(BaseModel):
    command: Literal["delta"] = "delta"
    d: list[int]
    e: list[int]
    theta: str
    I: int
    omega_d: int
    sigma_omega_e: int
    delta: int


class SchemaReport(BaseModel):
    command: Literal["schema"] = "schema"
    schemas: dict[str, Any]


REPORT_MODELS: dict[str, type[BaseModel]] = {
    "validate": ValidateReport,
    "series": SeriesReport,
    "wallcross": WallcrossReport,
    "factorize": FactorizeReport,
    "oracle": OracleReport,
    "dilog": DilogReport,
    "delta": DeltaReport,
}


def schemas() -> dict[str, Any]:
    """JSON schemas of the config and every report, keyed by name."""
    out: dict[str, Any] = {"run_config": RunConfig.model_json_schema()}
    for name, model in REPORT_MODELS.items():
        out[f"{name}_report"] = model.model_json_schema()
    out["error_report"] = ErrorReport.model_json_schema()
    return out
