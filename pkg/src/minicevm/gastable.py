"""Source-level gas table and the cost functions built on it.

The interpreters above the linear IRs charge these costs. Each one is an
upper bound on the EVM code the construct becomes, so a run's accumulated
gas bounds the gas the compiled bytecode will use on the same inputs.
"""
from __future__ import annotations

import json
from importlib import resources

from .core import ast as A
from .evm import fees as F

TABLE = json.loads(resources.files("minicevm.data").joinpath("source_gas.json").read_text())

NODE = TABLE["node"]
EDGE = TABLE["edge"]
COND = TABLE["cond"]
CONST = TABLE["const"]
TEMP = TABLE["temp"]
SET = TABLE["set"]
SLOAD = TABLE["sload"]
SHA1 = TABLE["sha1"]
SHA2 = TABLE["sha2"]
UNOP = TABLE["unop"]
BINOP = TABLE["binop"]
CALL0 = TABLE["call0"]
CALL1 = TABLE["call1"]
REVERT = TABLE["revert"]


def minic_expr(e) -> int:
    """Cost of evaluating a MiniC expression; storage paths are read implicitly."""
    t = type(e)
    if t is A.Etemp:
        return TEMP
    if t is A.Eint256 or t is A.Eint:
        return CONST
    if t is A.Eglob or t is A.Eindex or t is A.Efield:
        return SLOAD + minic_addr(e)
    if t is A.Ebinop:
        c = SHA2 if e.op == "sha2" else BINOP[e.op]
        return c + minic_expr(e.e1) + minic_expr(e.e2)
    if t is A.Eunop:
        return (SHA1 if e.op == "sha1" else UNOP[e.op]) + minic_expr(e.e)
    if t is A.Ecall0:
        return CALL0[e.builtin]
    if t is A.Ecall1:
        return CALL1[e.builtin] + minic_expr(e.e)
    raise TypeError(f"no cost for {e!r}")


def minic_addr(e) -> int:
    """Cost of computing the storage address of a MiniC storage path."""
    t = type(e)
    if t is A.Eglob:
        return CONST
    if t is A.Eindex:
        return SHA2 + minic_addr(e.e) + minic_expr(e.idx)
    if t is A.Efield:
        return SHA2 + minic_addr(e.e) + CONST
    raise TypeError(f"not a storage path: {e!r}")


def clike_expr(e) -> int:
    """Cost of evaluating a Clike expression (explicit dereference)."""
    t = type(e)
    if t is A.Etemp:
        return TEMP
    if t is A.Eint256 or t is A.Eint:
        return CONST
    if t is A.Ederef:
        return SLOAD + clike_expr(e.e)
    if t is A.Ebinop:
        c = SHA2 if e.op == "sha2" else BINOP[e.op]
        return c + clike_expr(e.e1) + clike_expr(e.e2)
    if t is A.Eunop:
        return (SHA1 if e.op == "sha1" else UNOP[e.op]) + clike_expr(e.e)
    if t is A.Ecall0:
        return CALL0[e.builtin]
    if t is A.Ecall1:
        return CALL1[e.builtin] + clike_expr(e.e)
    raise TypeError(f"no cost for {e!r}")


def sstore(old: int, new: int) -> int:
    return F.sstore_cost(old, new)


def call_entry(slots: int, nargs: int) -> int:
    """Caller-side jump plus callee entry and slot introduction."""
    return TABLE["call_site"] + TABLE["intro_per_slot"] * (slots - nargs)


def call_return(has_ret: bool) -> int:
    return TABLE["return_landing"] + (SET if has_ret else 0)


def done_internal(slots: int, has_value: bool) -> int:
    base = TABLE["done_internal_value"] if has_value else TABLE["done_internal_unit"]
    return base + TABLE["done_per_slot"] * slots


def done_method(has_value: bool) -> int:
    return TABLE["done_method_value"] if has_value else TABLE["done_method_unit"]


def done_constructor(runtime_len: int) -> int:
    w = F.words_for(runtime_len)
    return TABLE["done_constructor"] + F.G_COPY * w + F.mem_cost(w)


def transfer(amount: int, ok: bool) -> int:
    call = F.G_CALL + (F.G_CALLVALUE if amount else 0)
    return call + (TABLE["transfer_ok"] if ok else TABLE["transfer_fail"])


def log(ntopics: int, ndata: int) -> int:
    return (TABLE["log_fixed"] + TABLE["log_per_data"] * ndata + F.G_LOG
            + F.G_LOGTOPIC * ntopics + F.G_LOGDATA * 32 * ndata + F.mem_cost(ndata))


def method_prologue(position: int, nargs: int, slots: int) -> int:
    """Dispatcher comparisons up to ``position`` (1-based), entry, argument fetch, slot intro."""
    return (TABLE["dispatch_base"] + TABLE["dispatch_per_method"] * position + TABLE["method_entry"]
            + TABLE["fetcharg_method"] * nargs + TABLE["intro_per_slot"] * (slots - nargs))


def constructor_prologue(nargs: int, slots: int) -> int:
    return TABLE["fetcharg_constructor"] * nargs + TABLE["intro_per_slot"] * (slots - nargs)


def dispatch_miss(nmethods: int) -> int:
    """Unknown selector: all comparisons, the revert label, the revert."""
    return TABLE["dispatch_base"] + TABLE["dispatch_per_method"] * nmethods + NODE + REVERT
