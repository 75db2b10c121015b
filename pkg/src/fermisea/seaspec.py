"""
JSON sea specifications.

Schema::

    {"type": "intervals", "intervals": [[lo, hi], ...]}
    {"type": "product", "factors": [<spec>, ...]}
    {"type": "grid", "dim": d, "resolution": N, "cells": "<bits>"}

Angles are radians; endpoints outside [-pi, pi) are canonicalised.  Grid
``cells`` is either a string of ``N^d`` characters ``0``/``1`` or the base64
encoding of ``numpy.packbits`` of the same bits (big-endian bit order).
Bits are row-major over ``cells[i_1, ..., i_d]``.  Constructed seas may carry
an extra ``"metadata"`` object, which parsing ignores.
"""

from __future__ import annotations

import base64
import binascii
import json
import logging
import re

import numpy as np

from .errors import SpecError
from .fermi_sea import FermiSea, Grid, IntervalUnion, Product

log = logging.getLogger(__name__)


def _line_of(text: str, needle: str) -> int:
    """Line of the first occurrence of ``needle``; a quoted needle must be a key."""
    pattern = re.escape(needle) + (r"\s*:" if needle.startswith('"') else "")
    m = re.search(pattern, text)
    return text.count("\n", 0, m.start()) + 1 if m else 1


def _decode_cells(raw: str, count: int, line: int) -> np.ndarray:
    compact = re.sub(r"\s+", "", raw)
    if len(compact) == count and set(compact) <= {"0", "1"}:
        return np.frombuffer(compact.encode("ascii"), dtype=np.uint8) == ord("1")
    try:
        packed = np.frombuffer(base64.b64decode(compact, validate=True), dtype=np.uint8)
    except (binascii.Error, ValueError) as exc:
        raise SpecError(line, f"cells is neither a 0/1 string of length {count} nor base64: {exc}") from exc
    bits = np.unpackbits(packed)
    if bits.size < count or np.any(bits[count:]):
        raise SpecError(line, f"base64 cells decode to {bits.size} bits, expected {count}")
    return bits[:count].astype(bool)


def sea_from_dict(obj, text: str = "") -> FermiSea:
    if not isinstance(obj, dict) or "type" not in obj:
        raise SpecError(_line_of(text, "{"), "a sea spec must be an object with a 'type' key")
    kind = obj["type"]
    if kind == "intervals":
        line = _line_of(text, '"intervals"')
        pairs = obj.get("intervals")
        if not isinstance(pairs, list):
            raise SpecError(line, "'intervals' must be a list of [lo, hi] pairs")
        for p in pairs:
            if not (isinstance(p, (list, tuple)) and len(p) == 2 and all(isinstance(v, (int, float)) for v in p)):
                raise SpecError(line, f"malformed interval {p!r}")
        try:
            return IntervalUnion.from_pairs(pairs, strict=True)
        except ValueError as exc:
            raise SpecError(line, str(exc)) from exc
    if kind == "product":
        factors = obj.get("factors")
        if not isinstance(factors, list) or not factors:
            raise SpecError(_line_of(text, '"factors"'), "'factors' must be a non-empty list")
        return Product(tuple(sea_from_dict(f, text) for f in factors))
    if kind == "grid":
        line = _line_of(text, '"resolution"')
        try:
            dim = int(obj["dim"])
            n = int(obj["resolution"])
            raw = obj["cells"]
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(line, f"grid spec needs integer 'dim', 'resolution' and a 'cells' string ({exc})") from exc
        if dim < 1 or n < 1 or not isinstance(raw, str):
            raise SpecError(line, "grid needs dim >= 1, resolution >= 1 and string cells")
        cells = _decode_cells(raw, n ** dim, line).reshape((n,) * dim)
        return Grid(dim, n, cells, exact=bool(obj.get("exact", False)))
    raise SpecError(_line_of(text, str(kind)), f"unknown sea type {kind!r}")


def parse_sea_spec(text: str) -> FermiSea:
    """Parse a JSON sea specification into a canonical sea."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(exc.lineno, exc.msg) from exc
    sea = sea_from_dict(obj, text)
    m = sea.measure()
    if m == 0.0 or m >= (2 * np.pi) ** sea.dim * (1 - 1e-15):
        log.warning("degenerate sea of measure %r: every S_L vanishes", m)
    return sea


def sea_to_dict(M: FermiSea, metadata: dict | None = None, packed: bool = False) -> dict:
    if isinstance(M, IntervalUnion):
        out = {"type": "intervals", "intervals": [[lo, hi] for lo, hi in M.intervals]}
    elif isinstance(M, Product):
        out = {"type": "product", "factors": [sea_to_dict(f, packed=packed) for f in M.factors]}
    elif isinstance(M, Grid):
        flat = M.cells.reshape(-1)
        if packed:
            cells = base64.b64encode(np.packbits(flat.astype(np.uint8)).tobytes()).decode("ascii")
        else:
            cells = "".join("1" if b else "0" for b in flat)
        out = {"type": "grid", "dim": M.dim, "resolution": M.resolution, "cells": cells}
        if M.exact:
            out["exact"] = True
    else:
        raise TypeError(f"unsupported sea type {type(M).__name__}")
    if metadata:
        out["metadata"] = metadata
    return out


def dump_sea_spec(M: FermiSea, metadata: dict | None = None, packed: bool = False) -> str:
    return json.dumps(sea_to_dict(M, metadata, packed), indent=2) + "\n"
