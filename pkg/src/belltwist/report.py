"""JSON reports with a replay manifest, and their schemas."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np

from . import __version__
from .bounds import classical_bound, dimensional_bound, tsirelson_bound
from .core import coefficient_matrix, matrix_digest
from .tightness import certify, min_dimension

SCHEMAS = ("bounds", "seesaw", "modified", "optimize", "histogram")


@dataclass(frozen=True)
class RunManifest:
    command: str
    arguments: dict = field(default_factory=dict)
    seed: int | None = None
    version: str = __version__
    matrix_sha256: str | None = None
    # left null so that replaying a run gives byte-identical output
    timestamp: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _rows(x) -> list:
    return [[float(t) for t in row] for row in np.atleast_2d(x)]


def _floats(x) -> list:
    return [float(t) for t in np.ravel(x)]


def bound_report(g, dprimes=(), restarts: int = 50, seed: int = 0) -> dict:
    """B with its maximizing signs, T, nu, the tightness certificate and optional see-saw T_d'."""
    g = coefficient_matrix(g)
    cb = classical_bound(g)
    T = tsirelson_bound(g)
    cert = certify(g)
    tightness = cert.to_dict()
    if cert.tight:
        tightness["dprime_min"] = min_dimension(cert)
    seesaw = []
    for dp in dprimes:
        res = dimensional_bound(g, dp, restarts=restarts, seed=seed)
        seesaw.append({**res.summary(), "lower_bound": True})
    return {
        "matrix_sha256": matrix_digest(g),
        "shape": list(g.shape),
        "B": cb.value,
        "B_argmax_a1": _floats(cb.a1),
        "B_argmax_a2": _floats(cb.a2),
        "T": T,
        "nu": T / cb.value,
        "tightness": tightness,
        "seesaw": seesaw,
    }


def seesaw_report(g, result) -> dict:
    g = coefficient_matrix(g)
    return {
        "matrix_sha256": matrix_digest(g),
        **result.summary(),
        "lower_bound": True,
        "T": tsirelson_bound(g),
        "iterations_per_restart": [int(i) for i in result.iterations_per_restart],
        "values_per_restart": _floats(result.values_per_restart),
        "v": _rows(result.strategy.v),
        "w": _rows(result.strategy.w),
    }


def modified_report(g, gp, spec: dict) -> dict:
    """Input and output bounds of a twist or shift."""
    g = coefficient_matrix(g)
    gp = coefficient_matrix(gp)
    B = classical_bound(gp).value
    T = tsirelson_bound(gp)
    return {
        "input_sha256": matrix_digest(g),
        "matrix_sha256": matrix_digest(gp),
        "spec": spec,
        "matrix": _rows(gp),
        "T_input": tsirelson_bound(g),
        "B_input": classical_bound(g).value,
        "T": T,
        "B": B,
        "nu": T / B,
        "tightness": certify(gp).to_dict(),
    }


def with_manifest(doc: dict, manifest: RunManifest) -> dict:
    return {**doc, "manifest": manifest.to_dict()}


def dumps(doc: dict) -> str:
    """Canonical text: sorted keys, two-space indent, shortest round-trip floats."""
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


@lru_cache(maxsize=None)
def schema(kind: str) -> dict:
    if kind not in SCHEMAS:
        raise KeyError(f"no schema named {kind!r}")
    text = resources.files("belltwist").joinpath("schemas", f"{kind}.schema.json").read_text()
    return json.loads(text)


def validate(doc: dict, kind: str) -> None:
    """Raise jsonschema.ValidationError if ``doc`` does not match the ``kind`` schema."""
    import jsonschema

    jsonschema.validate(doc, schema(kind))
