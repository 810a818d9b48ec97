"""Canonical JSON text used everywhere a payload must be byte-reproducible."""

from __future__ import annotations

import json


def dumps_canonical(obj) -> str:
    """Pretty, key-sorted JSON with a trailing newline; diffable and stable."""
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
