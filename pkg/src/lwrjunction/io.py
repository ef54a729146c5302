"""Scenario files: schema validation, parsing and result serialization.

A scenario file is a JSON object with ``schema_version`` (currently 1), a
``kind`` of ``junction``, ``riemann`` or ``network`` and an optional integer
``seed``.  The schemas live in ``lwrjunction/schemas``.  Parsing collects
every schema and semantic problem before raising, so a single run reports
all of them.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Any, Sequence

import jsonschema
from referencing import Registry, Resource

from .ctm import NetworkScenario
from .errors import ValidationError
from .junction_flux import JunctionSpec
from .riemann import RiemannInput

SCHEMA_VERSION = 1
KINDS = ("junction", "riemann", "network")


@dataclass(frozen=True)
class JunctionCase:
    junction: JunctionSpec
    demands: tuple[float, ...]
    supplies: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "demands", tuple(float(v) for v in self.demands))
        object.__setattr__(self, "supplies", tuple(float(v) for v in self.supplies))
        errors = _boundary_errors(self.junction.up_capacity, self.junction.down_capacity,
                                  self.demands, self.supplies)
        if errors:
            raise ValidationError(errors)

    def to_dict(self) -> dict[str, Any]:
        return {
            "up_capacity": list(self.junction.up_capacity),
            "down_capacity": list(self.junction.down_capacity),
            "xi": [list(r) for r in self.junction.xi],
            "demands": list(self.demands),
            "supplies": list(self.supplies),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "JunctionCase":
        errors = []
        try:
            j = JunctionSpec(data["up_capacity"], data["down_capacity"], data["xi"])
        except ValidationError as exc:
            errors += exc.errors
            j = None
        errors += _boundary_errors(data["up_capacity"], data["down_capacity"], data["demands"], data["supplies"])
        if errors:
            raise ValidationError(errors)
        return cls(j, data["demands"], data["supplies"])


def _boundary_errors(up, down, demands, supplies) -> list[str]:
    errors = []
    for name, vals, caps in (("demands", demands, up), ("supplies", supplies, down)):
        if len(vals) != len(caps):
            errors.append(f"{name}: expected {len(caps)} values, got {len(vals)}")
            continue
        for i, (v, c) in enumerate(zip(vals, caps)):
            if not (math.isfinite(v) and 0.0 <= v <= c):
                errors.append(f"{name}[{i}] = {v} outside [0, capacity {c}]")
    return errors


_PAYLOAD = {"junction": JunctionCase, "riemann": RiemannInput, "network": NetworkScenario}


@dataclass(frozen=True)
class ScenarioFile:
    kind: str
    payload: Any  # JunctionCase | RiemannInput | NetworkScenario
    seed: int | None = None
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict[str, Any]:
        out = {"schema_version": self.schema_version, "kind": self.kind}
        if self.seed is not None:
            out["seed"] = self.seed
        out.update(self.payload.to_dict())
        return out


@lru_cache(maxsize=None)
def _schemas() -> tuple[Registry, dict[str, dict]]:
    root = resources.files("lwrjunction") / "schemas"
    loaded = {p.name: json.loads(p.read_text(encoding="utf-8")) for p in root.iterdir() if p.name.endswith(".json")}
    registry = Registry().with_resources((name, Resource.from_contents(s)) for name, s in loaded.items())
    return registry, loaded


def schema(kind: str) -> dict:
    return _schemas()[1][f"{kind}.schema.json"]


def _format_error(err: jsonschema.ValidationError) -> str:
    path = "/".join(str(p) for p in err.absolute_path) or "<root>"
    return f"{path}: {err.message}"


def schema_errors(data: Any) -> list[str]:
    """Every schema violation in ``data``, in a deterministic order."""
    if not isinstance(data, dict):
        return ["<root>: scenario must be a JSON object"]
    kind = data.get("kind")
    if kind not in KINDS:
        return [f"kind: must be one of {', '.join(KINDS)}, got {kind!r}"]
    registry, _ = _schemas()
    validator = jsonschema.Draft202012Validator(schema(kind), registry=registry)
    errs = sorted(validator.iter_errors(data), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    return [_format_error(e) for e in errs]


def _build(kind: str, data: dict) -> Any:
    body = {k: v for k, v in data.items() if k not in ("schema_version", "kind", "seed")}
    return _PAYLOAD[kind].from_dict(body)


def scenario_from_data(data: Any) -> ScenarioFile:
    errors = schema_errors(data)
    if errors:
        # report semantic problems too when the structure is sound enough to check them
        if isinstance(data, dict) and data.get("kind") in KINDS:
            known = schema(data["kind"])["properties"]
            try:
                _build(data["kind"], {k: v for k, v in data.items() if k in known})
            except ValidationError as exc:
                errors += [e for e in exc.errors if e not in errors]
            except (KeyError, TypeError, ValueError, IndexError, AttributeError):
                pass
        raise ValidationError(errors)
    return ScenarioFile(data["kind"], _build(data["kind"], data), data.get("seed"), data["schema_version"])


def parse_scenario(raw: bytes | str) -> ScenarioFile:
    """Parse and validate a scenario file; raises ValidationError listing every problem."""
    try:
        text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
        data = json.loads(text)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"malformed JSON: {exc}") from None
    return scenario_from_data(data)


def load_scenario(path) -> ScenarioFile:
    with open(path, "rb") as fh:
        return parse_scenario(fh.read())


def _plain(obj: Any) -> Any:
    # numpy scalars/arrays and tuples into plain JSON types
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def dumps(obj: Any) -> str:
    """Deterministic JSON; floats use the shortest repr that round-trips exactly."""
    if hasattr(obj, "to_dict"):
        obj = obj.to_dict()
    return json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_csv(rows: Sequence[Sequence[Any]], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
