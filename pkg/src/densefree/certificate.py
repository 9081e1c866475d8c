"""Canonical JSON certificates for finished runs.

Top-level keys always appear in this order::

    format, header, points, generators, killed_words,
    density_log, fragments, registry, summary

Point rows are sorted by id, pair lists by source id, generators by label
(level, then free before density, then index). Words are lists of
``[token, sign]`` with the first-applied letter first. Output is compact
UTF-8 JSON with a trailing newline, so equal certificates are equal bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Union

from .errors import MalformedCertificate
from .words import GeneratorLabel

if TYPE_CHECKING:  # the verifier imports this module without any construction code
    from .runs import ArrayRun
    from .tree_construction import TreeState

FORMAT = "densefree-certificate/1"
KEYS = (
    "format",
    "header",
    "points",
    "generators",
    "killed_words",
    "density_log",
    "fragments",
    "registry",
    "summary",
)
MODULES = ("tree", "stable", "dense")
KINDS = ("set", "graph", "dlo", "eqrel")


@dataclass
class Certificate:
    module: str
    kind: str
    seed: int
    parameters: dict[str, Any]
    points: list[list]
    generators: list[dict[str, Any]] = field(default_factory=list)
    killed_words: list[dict[str, Any]] = field(default_factory=list)
    density_log: list[dict[str, Any]] = field(default_factory=list)
    fragments: list[list[int]] = field(default_factory=list)
    registry: dict[str, Any] | None = None
    extra_summary: dict[str, int] = field(default_factory=dict)

    def summary(self) -> dict[str, int]:
        out = {
            "points": len(self.points),
            "generators": len(self.generators),
            "killed_words": len(self.killed_words),
            "density_requirements": len(self.density_log),
            "fragments": len(self.fragments),
        }
        out.update(sorted(self.extra_summary.items()))
        return out

    def to_document(self) -> dict[str, Any]:
        return {
            "format": FORMAT,
            "header": {
                "module": self.module,
                "kind": self.kind,
                "seed": self.seed,
                "parameters": dict(sorted(self.parameters.items())),
            },
            "points": self.points,
            "generators": self.generators,
            "killed_words": self.killed_words,
            "density_log": self.density_log,
            "fragments": self.fragments,
            "registry": self.registry,
            "summary": self.summary(),
        }

    def dumps(self) -> str:
        return dumps(self.to_document())


def dumps(doc: dict[str, Any]) -> str:
    return json.dumps(doc, ensure_ascii=False, separators=(",", ":")) + "\n"


def _gen_entries(gens) -> list[dict[str, Any]]:
    out = []
    for lab in sorted(gens, key=GeneratorLabel.sort_key):
        out.append({"label": lab.token, "role": lab.role.value, "pairs": [list(p) for p in gens[lab].committed.pairs()]})
    return out


def _density_entries(log) -> list[dict[str, Any]]:
    return [{"requirement": [list(p) for p in req.pairs()], "label": lab.token} for req, lab in log]


def _witness_entries(witnesses) -> list[dict[str, Any]]:
    return [wt.to_json() for wt in witnesses]


def export_certificate(state: Union["TreeState", "ArrayRun"], parameters: dict[str, Any] | None = None) -> Certificate:
    """Snapshot a finished run; ``parameters`` go into the header verbatim."""
    from .tree_construction import TreeState

    s = state.structure
    if isinstance(state, TreeState):
        params = {
            "branching": state.branching,
            "max_word_len": state.max_word_len,
            "absorb": state.absorb,
            "stages": state.stage - 1,
            "words_per_stage": state.words_per_stage,
            "density_size": state.density_size,
        }
        params.update(parameters or {})
        return Certificate(
            "tree",
            s.kind.value,
            s.seed,
            params,
            s.relation_rows(),
            _gen_entries(state.gens),
            _witness_entries(state.witnesses),
            _density_entries(state.density_log),
            [list(f) for f in state.fragments],
        )
    reg = state.registry
    registry = {
        "dims": list(reg.dims),
        "classes": list(reg.classes),
        "base": sorted(reg.base),
        "cells": [[ix.type_idx, ix.column, ix.row, p] for ix, p in sorted(reg.cells.items())],
    }
    params = dict(state.parameters)
    params.update(parameters or {})
    return Certificate(
        state.module,
        s.kind.value,
        s.seed,
        params,
        s.relation_rows(),
        _gen_entries(state.gens),
        _witness_entries(state.witnesses),
        _density_entries(state.density_log),
        [],
        registry,
        {"unclaimed_words": len(state.unclaimed)},
    )


def _need(cond: bool, what: str) -> None:
    if not cond:
        raise MalformedCertificate(what)


def _is_int(x: Any) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _pairs(x: Any, what: str) -> list[list[int]]:
    _need(isinstance(x, list), f"{what} must be a list")
    for p in x:
        _need(isinstance(p, list) and len(p) == 2 and all(map(_is_int, p)), f"bad pair in {what}")
    return x


def _word(x: Any) -> list:
    _need(isinstance(x, list), "word must be a list")
    for tok in x:
        _need(isinstance(tok, list) and len(tok) == 2, "word letters are [token, sign]")
        _need(isinstance(tok[0], str) and tok[1] in (1, -1), "bad word letter")
        try:
            GeneratorLabel.parse(tok[0])
        except ValueError as e:
            raise MalformedCertificate(f"bad label {tok[0]!r}: {e}") from None
    return x


def from_document(doc: Any) -> Certificate:
    """Validate the shape of a parsed document and wrap it."""
    _need(isinstance(doc, dict), "certificate must be a JSON object")
    _need(list(doc) == list(KEYS), f"top-level keys must be {list(KEYS)}")
    _need(doc["format"] == FORMAT, f"unsupported format {doc['format']!r}")
    h = doc["header"]
    _need(isinstance(h, dict) and list(h) == ["module", "kind", "seed", "parameters"], "bad header")
    _need(h["module"] in MODULES, "unknown module")
    _need(h["kind"] in KINDS, "unknown kind")
    _need(_is_int(h["seed"]), "seed must be an integer")
    _need(isinstance(h["parameters"], dict), "parameters must be an object")

    points = doc["points"]
    _need(isinstance(points, list), "points must be a list")
    width = {"set": 1, "graph": 2, "dlo": 2, "eqrel": 2}[h["kind"]]
    for i, row in enumerate(points):
        _need(isinstance(row, list) and len(row) == width and row[0] == i, f"bad point row {i}")
    if h["kind"] == "graph":
        for row in points:
            _need(isinstance(row[1], list) and all(_is_int(x) and 0 <= x < row[0] for x in row[1]), "bad adjacency")
    elif width == 2:
        _need(all(_is_int(row[1]) for row in points), "bad relation data")

    gens = doc["generators"]
    _need(isinstance(gens, list), "generators must be a list")
    for g in gens:
        _need(isinstance(g, dict) and list(g) == ["label", "role", "pairs"], "bad generator entry")
        _word([[g["label"], 1]])
        _need(g["label"].rsplit(".", 1)[-1] == g["role"], "role does not match label")
        _pairs(g["pairs"], f"generator {g['label']}")
    for k in doc["killed_words"]:
        _need(isinstance(k, dict) and list(k) == ["word", "start", "end", "stage"], "bad killed word entry")
        _word(k["word"])
        _need(all(_is_int(k[f]) for f in ("start", "end", "stage")), "bad witness fields")
    for d in doc["density_log"]:
        _need(isinstance(d, dict) and list(d) == ["requirement", "label"], "bad density entry")
        _pairs(d["requirement"], "requirement")
        _word([[d["label"], 1]])
    _need(isinstance(doc["fragments"], list), "fragments must be a list")
    for f in doc["fragments"]:
        _need(isinstance(f, list) and all(map(_is_int, f)), "bad fragment")
    reg = doc["registry"]
    if reg is not None:
        _need(isinstance(reg, dict) and list(reg) == ["dims", "classes", "base", "cells"], "bad registry")
        _need(isinstance(reg["dims"], list) and len(reg["dims"]) == 3 and all(map(_is_int, reg["dims"])), "bad dims")
        for c in reg["cells"]:
            _need(isinstance(c, list) and len(c) == 4 and all(map(_is_int, c)), "bad cell")
    summary = doc["summary"]
    _need(isinstance(summary, dict), "summary must be an object")
    cert = Certificate(
        h["module"],
        h["kind"],
        h["seed"],
        h["parameters"],
        points,
        gens,
        doc["killed_words"],
        doc["density_log"],
        doc["fragments"],
        reg,
    )
    base = cert.summary()
    cert.extra_summary = {k: v for k, v in summary.items() if k not in base}
    _need(cert.summary() == summary, "summary does not match the content")
    return cert


def loads(text: str) -> Certificate:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedCertificate(f"not JSON: {e}") from None
    return from_document(doc)


def load(path: str) -> Certificate:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def save(cert: Certificate, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(cert.dumps())
