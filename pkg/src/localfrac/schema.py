"""The JSON schema every command's ``--format json`` output conforms to."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import jsonschema

__all__ = ["output_schema", "validate_record", "is_valid_record"]


@lru_cache(maxsize=1)
def output_schema() -> dict:
    text = resources.files("localfrac").joinpath("schemas/output_record.schema.json").read_text("utf-8")
    return json.loads(text)


def validate_record(record: dict | str) -> dict:
    """Parse (if needed) and validate a record; raises jsonschema.ValidationError."""
    if isinstance(record, str):
        record = json.loads(record)
    jsonschema.validate(record, output_schema(), cls=jsonschema.Draft202012Validator)
    return record


def is_valid_record(record: dict | str) -> bool:
    try:
        validate_record(record)
    except (jsonschema.ValidationError, json.JSONDecodeError):
        return False
    return True
