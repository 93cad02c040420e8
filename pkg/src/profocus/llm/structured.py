"""Pull role-specific JSON payloads out of free-form model replies."""

from __future__ import annotations

import json
import logging
import re
from typing import Any, Sequence

from ..agents import STOP
from ..perception import NEUTRAL_VALUE, Sufficiency, VisualQuery, clamp_unit

logger = logging.getLogger(__name__)

SCHEMAS = ("query", "verdict", "values", "decision")

SCHEMA_HINTS = {
    "query": '{"question": "...", "focus_region": [x1, y1, x2, y2]}',
    "verdict": '{"verdict": "sufficient" | "insufficient"}',
    "values": '{"values": {"<waypoint id>": <number in [0, 1]>, ...}}',
    "decision": '{"decision": "<waypoint id>" | "STOP"}',
}

_FENCE = re.compile(r"```(?:json|JSON)?\s*(.*?)```", re.DOTALL)


class StructuredOutputError(ValueError):
    pass


def extract_json(text: str) -> Any:
    """First fenced JSON block, else the first decodable object in the text."""
    for block in _FENCE.findall(text):
        try:
            return json.loads(block)
        except json.JSONDecodeError:
            continue
    decoder = json.JSONDecoder()
    for i, ch in enumerate(text):
        if ch == "{":
            try:
                obj, _ = decoder.raw_decode(text, i)
                return obj
            except json.JSONDecodeError:
                continue
    raise StructuredOutputError("no JSON object found")


def _parse(payload: Any, schema: str, candidates: Sequence[str] | None) -> Any:
    if not isinstance(payload, dict):
        raise StructuredOutputError("payload is not an object")
    if schema == "query":
        q = payload.get("question")
        region = payload.get("focus_region")
        if not isinstance(q, str) or not q.strip():
            raise StructuredOutputError("missing question")
        if not (isinstance(region, list) and len(region) == 4):
            raise StructuredOutputError("focus_region must be four numbers")
        try:
            coords = tuple(float(c) for c in region)
        except (TypeError, ValueError):
            raise StructuredOutputError("focus_region must be four numbers") from None
        return VisualQuery(q.strip(), coords)
    if schema == "verdict":
        v = payload.get("verdict", payload.get("sufficient"))
        if isinstance(v, bool):
            return Sufficiency.SUFFICIENT if v else Sufficiency.INSUFFICIENT
        try:
            return Sufficiency(str(v).strip().lower())
        except ValueError:
            raise StructuredOutputError(f"bad verdict {v!r}") from None
    if schema == "values":
        raw = payload.get("values", payload)
        if not isinstance(raw, dict):
            raise StructuredOutputError("values must be an object")
        out = {}
        for k, v in raw.items():
            c = clamp_unit(v)
            if c is None:
                raise StructuredOutputError(f"value for {k!r} is not a number")
            out[str(k)] = c
        if candidates is not None:
            if not any(c in out for c in candidates):
                raise StructuredOutputError("no candidate was valued")
            out = {c: out.get(c, NEUTRAL_VALUE) for c in candidates}
        return out
    if schema == "decision":
        d = payload.get("decision")
        if not isinstance(d, str):
            raise StructuredOutputError("missing decision")
        d = d.strip()
        if d.upper() == STOP:
            return STOP
        if candidates is not None and d not in candidates:
            raise StructuredOutputError(f"decision {d!r} is not a candidate")
        return d
    raise ValueError(f"unknown schema {schema!r}")


def neutral_default(schema: str, candidates: Sequence[str] | None = None) -> Any:
    if schema == "verdict":
        return Sufficiency.SUFFICIENT
    if schema == "values":
        return {c: NEUTRAL_VALUE for c in candidates or ()}
    if schema == "decision":
        return candidates[0] if candidates else STOP
    return None


def parse_structured(
    text: str,
    schema: str,
    *,
    candidates: Sequence[str] | None = None,
    strict: bool = False,
    warnings: list[str] | None = None,
) -> Any:
    """Parse ``text`` against ``schema``.

    With ``strict`` a failure raises :class:`StructuredOutputError`; otherwise
    the role's neutral default is returned (sufficient, 0.5 per candidate,
    first candidate; ``None`` for queries) and a warning is recorded.
    """
    if schema not in SCHEMAS:
        raise ValueError(f"unknown schema {schema!r}")
    try:
        return _parse(extract_json(text), schema, candidates)
    except StructuredOutputError as exc:
        if strict:
            raise
        msg = f"unparseable {schema} output ({exc}); using neutral default"
        logger.warning(msg)
        if warnings is not None:
            warnings.append(msg)
        return neutral_default(schema, candidates)
