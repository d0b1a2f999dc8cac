"""JSON-schema validation of design and case documents."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import jsonschema

from .errors import CaseError

SCHEMAS = {"cable_design": "cable_design.schema.json", "case": "case.schema.json"}


@lru_cache(maxsize=None)
def load_schema(kind):
    try:
        filename = SCHEMAS[kind]
    except KeyError:
        raise ValueError(f"unknown document kind {kind!r}") from None
    return json.loads(resources.files("lfac.data.schema").joinpath(filename).read_text())


def _path(error):
    parts = [str(p) for p in error.absolute_path]
    return "/".join(parts) if parts else "<root>"


def validate_document(doc, kind, location=""):
    """Raise :class:`CaseError` naming the first offending entry, if any."""
    validator = jsonschema.Draft202012Validator(load_schema(kind))
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        where = f"{location}#{_path(err)}" if location else _path(err)
        raise CaseError(err.message, where)
