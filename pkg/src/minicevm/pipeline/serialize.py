"""Deterministic JSON dumps of any phase's program."""
from __future__ import annotations

import dataclasses
import enum
import json

from ..core.values import VUNIT, Pair, Singleton, Vhash, Vhash2, Vint, Vunit, vint

FORMAT_VERSION = 1


def to_data(o):
    """Plain JSON data for an IR value; every node carries its class name."""
    if o is None or isinstance(o, (bool, int, str)):
        return o
    if isinstance(o, enum.Enum):
        return o.name
    if isinstance(o, bytes):
        return "0x" + o.hex()
    if dataclasses.is_dataclass(o):
        d = {"node": type(o).__name__}
        for f in dataclasses.fields(o):
            d[f.name] = to_data(getattr(o, f.name))
        return d
    if isinstance(o, (list, tuple)):
        return [to_data(x) for x in o]
    if isinstance(o, (set, frozenset)):
        return sorted((to_data(x) for x in o), key=_order)
    if isinstance(o, dict):
        if all(isinstance(k, str) for k in o):
            return {k: to_data(o[k]) for k in sorted(o)}
        return sorted(([to_data(k), to_data(v)] for k, v in o.items()), key=_order)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _order(x):
    return json.dumps(x, sort_keys=True)


def dump(phase: str, program) -> str:
    doc = {"format": "minicevm-ir", "version": FORMAT_VERSION, "phase": phase,
           "program": to_data(program)}
    return json.dumps(doc, indent=1, sort_keys=True)


# ------------------------------------------------------------ state snapshots
# Storage keys are written as slot paths: Singleton(s) is [s] and
# Pair(base, k) is base's path followed by k.

def key_to_json(h) -> list:
    if type(h) is Singleton:
        return [h.slot]
    return key_to_json(h.base) + [h.key]


def key_from_json(path) -> object:
    if not path or not all(isinstance(x, int) and x >= 0 for x in path):
        raise ValueError(f"bad storage key {path!r}")
    h = Singleton(path[0])
    for k in path[1:]:
        h = Pair(h, k)
    return h


def value_to_json(v):
    t = type(v)
    if t is Vint:
        return v.n
    if t is Vunit:
        return None
    if t is Vhash:
        return {"hash": [value_to_json(v.v)]}
    if t is Vhash2:
        return {"hash": [value_to_json(v.v1), value_to_json(v.v2)]}
    raise TypeError(f"cannot serialize value {v!r}")


def value_from_json(x):
    if x is None:
        return VUNIT
    if isinstance(x, bool):
        raise ValueError("booleans are not values; use 0 or 1")
    if isinstance(x, int):
        return vint(x)
    if isinstance(x, str):
        return vint(int(x, 0))
    if isinstance(x, dict) and isinstance(x.get("hash"), list):
        parts = [value_from_json(p) for p in x["hash"]]
        if len(parts) == 1:
            return Vhash(parts[0])
        if len(parts) == 2:
            return Vhash2(*parts)
    raise ValueError(f"bad value {x!r}")


def state_to_json(storage: dict, balances: dict | None = None) -> dict:
    entries = sorted(([key_to_json(k), value_to_json(v)] for k, v in storage.items()), key=_order)
    doc = {"format": "minicevm-state", "version": FORMAT_VERSION,
           "storage": [{"key": k, "value": v} for k, v in entries]}
    if balances:
        doc["balances"] = {hex(a): b for a, b in sorted(balances.items()) if b}
    return doc


def state_from_json(doc: dict) -> tuple:
    """(storage, balances) from a snapshot document."""
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported state version {doc.get('version')!r}")
    storage = {key_from_json(e["key"]): value_from_json(e["value"]) for e in doc.get("storage", [])}
    balances = {int(a, 0): int(b) for a, b in doc.get("balances", {}).items()}
    return storage, balances


__all__ = ["to_data", "dump", "FORMAT_VERSION", "key_to_json", "key_from_json", "value_to_json",
           "value_from_json", "state_to_json", "state_from_json"]
