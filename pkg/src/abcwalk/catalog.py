"""Group catalog: named presentations with optional reducers and splits.

The catalog is a JSON document::

    {"format": "abcwalk-catalog/1",
     "groups": [{"name": ..., "D": 2, "m": 1,
                 "phi": [["2", "1"], ["1", "1"]],      # rows, exact rationals as text
                 "generators": [["1", "0"]],          # kernel generators w_j
                 "reducer": "t^2-3*t+1",              # optional, must have EDP
                 "split": {"p_plus": ..., "p_zero": ...}}]}   # optional
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .group import GroupSpec
from .laurent import LaurentPoly, parse_poly

CATALOG_FORMAT = "abcwalk-catalog/1"


class CatalogError(ValueError):
    pass


@dataclass(frozen=True)
class CatalogEntry:
    spec: GroupSpec
    reducer: LaurentPoly | None = None
    split: tuple[LaurentPoly, LaurentPoly] | None = None
    raw: dict | None = None

    @property
    def name(self) -> str:
        return self.spec.name


def _entry(raw: dict) -> CatalogEntry:
    try:
        name = raw["name"]
        D = int(raw["D"])
        phi = [[Fraction(x) for x in row] for row in raw["phi"]]
        gens = [[Fraction(x) for x in w] for w in raw["generators"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise CatalogError(f"malformed catalog entry {raw.get('name', '?')!r}: {exc}") from exc
    if len(phi) != D:
        raise CatalogError(f"{name}: D = {D} but phi has {len(phi)} rows")
    spec = GroupSpec(name, phi, gens, modulus=int(raw.get("m", 1)), description=raw.get("description", ""))
    reducer = parse_poly(raw["reducer"]) if raw.get("reducer") else None
    split = None
    if raw.get("split"):
        split = (parse_poly(raw["split"]["p_plus"]), parse_poly(raw["split"]["p_zero"]))
    return CatalogEntry(spec, reducer, split, raw)


def load_catalog(path: str | Path | None = None) -> dict[str, CatalogEntry]:
    if path is None:
        text = resources.files("abcwalk").joinpath("data/catalog.json").read_text()
    else:
        text = Path(path).read_text()
    doc = json.loads(text)
    if doc.get("format") != CATALOG_FORMAT:
        raise CatalogError(f"unsupported catalog format {doc.get('format')!r}")
    out = {}
    for raw in doc["groups"]:
        e = _entry(raw)
        if e.name in out:
            raise CatalogError(f"duplicate catalog entry {e.name!r}")
        out[e.name] = e
    return out


def get_entry(name: str, path: str | Path | None = None) -> CatalogEntry:
    cat = load_catalog(path)
    try:
        return cat[name]
    except KeyError:
        raise CatalogError(f"unknown group {name!r}; known: {', '.join(sorted(cat))}") from None
