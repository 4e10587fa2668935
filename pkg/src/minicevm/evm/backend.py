"""Methodical statements to EVM bytecode, and back.

Each statement has a fixed image. Label pushes always use PUSH2 so that
instruction sizes, and therefore label positions, are known before the
labels are resolved.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..core.values import Label, as_word
from ..errors import ImmediateTooWide, InternalError, UnresolvedLabel
from ..pipeline import expressionless as X
from ..core import ast as A
from .opcodes import Inst, decode, dup, op, push, swap

LABEL_WIDTH = 2

UNOPS = {"not": "ISZERO", "bitnot": "NOT"}
BINOPS = {"add": "ADD", "sub": "SUB", "mul": "MUL", "div": "DIV", "mod": "MOD", "lt": "LT",
          "gt": "GT", "eq": "EQ", "and": "AND", "or": "OR", "xor": "XOR"}
BUILTINS = {"caller": "CALLER", "callvalue": "CALLVALUE", "address": "ADDRESS", "number": "NUMBER"}


@dataclass
class Layout:
    """What a statement image may need to know about its surroundings."""
    labels: dict                     # Label -> pc
    runtime_len: int = 0
    constructor_len: int = 0
    revert_label: Label | None = None


def _label_push(label, lay: Layout | None) -> Inst:
    if lay is None:
        return push(0, LABEL_WIDTH)
    try:
        pc = lay.labels[label]
    except KeyError:
        raise UnresolvedLabel(f"unresolved label {label}") from None
    if pc >= 1 << (8 * LABEL_WIDTH):
        raise ImmediateTooWide(f"label {label} at {pc:#x} does not fit PUSH{LABEL_WIDTH}")
    return push(pc, LABEL_WIDTH)


def _wide(n: int, what: str) -> Inst:
    if n >= 1 << (8 * LABEL_WIDTH):
        raise ImmediateTooWide(f"{what} {n} does not fit PUSH{LABEL_WIDTH}")
    return push(n, LABEL_WIDTH)


def image(s, lay: Layout | None = None) -> list:
    """Instructions for one statement; ``lay=None`` sizes the image only."""
    t = type(s)
    if t is X.Xpush:
        if type(s.v) is Label:
            return [_label_push(s.v, lay)]
        n = as_word(s.v)
        if n >> 256:
            raise ImmediateTooWide(f"{n} exceeds 256 bits")
        return [push(n)]
    if t is X.Xdup:
        return [dup(s.n)]
    if t is X.Xswap:
        return [swap(s.n)]
    if t is X.Xpop:
        return [op("POP")]
    if t is X.Xsload:
        return [op("SLOAD")]
    if t is X.Xsstore:
        return [op("SSTORE")]
    if t is X.Xunop:
        if s.op == "sha1":
            return [push(0), op("MSTORE"), push(0x20), push(0), op("SHA3")]
        return [op(UNOPS[s.op])]
    if t is X.Xbinop:
        if s.op == "sha2":
            return [push(0x20), op("MSTORE"), push(0), op("MSTORE"), push(0x40), push(0), op("SHA3")]
        return [op(BINOPS[s.op])]
    if t is X.Xcall0:
        return [op(BUILTINS[s.builtin])]
    if t is X.Xcall1:
        return [op("BALANCE")]
    if t is X.Xlabel:
        return [op("JUMPDEST")]
    if t is X.Xjump:
        return [op("JUMP")]
    if t is X.Xjumpi:
        return [op("JUMPI")]
    if t is X.Xcalldataload:
        return [op("CALLDATALOAD")]
    if t is X.Xconstructordataload:
        return [push(0x20), push(32 * (s.nargs - s.index)), op("CODESIZE"), op("SUB"), push(0),
                op("CODECOPY"), push(0), op("MLOAD")]
    if t is X.Xtransfer:
        target = lay.revert_label if lay is not None else None
        return [push(0), dup(1), dup(1), dup(1), dup(6), dup(6), push(0), op("CALL"),
                op("ISZERO"), _label_push(target, lay), op("JUMPI"), op("POP"), op("POP")]
    if t is X.Xlog:
        code = []
        for i in range(s.ndata):
            code += [push(32 * i), op("MSTORE")]
        return code + [push(32 * s.ndata), push(0), Inst(0xA0 + s.ntopics)]
    if t is X.Xrevert:
        return [push(0), dup(1), op("REVERT")]
    if t is X.Xdone:
        return _done_image(s, lay)
    raise InternalError(f"no EVM image for {s!r}")


def _done_image(s, lay):
    if s.kind == A.FunctionKind.METHOD:
        if s.has_value:
            return [push(0), op("MSTORE"), push(0x20), push(0), op("RETURN")]
        return [push(0), dup(1), op("RETURN")]
    if s.kind == A.FunctionKind.CONSTRUCTOR:
        n = lay.runtime_len if lay else 0
        off = lay.constructor_len if lay else 0
        return [_wide(n, "runtime length"), dup(1), _wide(off, "constructor length"), push(0),
                op("CODECOPY"), push(0), op("RETURN")]
    k = s.nslots
    if not s.has_value:
        return [op("POP")] * k + [op("JUMP")]
    if k == 0:
        return [swap(1), op("JUMP")]
    return [swap(k)] + [op("POP")] * k + [swap(1), op("JUMP")]


def image_size(s) -> int:
    return sum(i.size for i in image(s))


def build_label_map(code: list) -> tuple:
    """(label -> pc, statement index -> pc, total length)."""
    labels, offsets, pc = {}, [], 0
    for s in code:
        offsets.append(pc)
        if type(s) is X.Xlabel:
            labels[s.label] = pc
        pc += image_size(s)
    return labels, offsets, pc


@dataclass
class Assembled:
    code: bytes
    offsets: list                    # statement index -> pc of its first instruction
    labels: dict
    source_map: list                 # (pc, statement index) for every instruction

    def statement_at(self, pc: int):
        lo, hi = 0, len(self.offsets)
        while lo < hi:
            mid = (lo + hi) // 2
            if self.offsets[mid] <= pc:
                lo = mid + 1
            else:
                hi = mid
        return lo - 1


def assemble(code: list, runtime_len: int = 0, revert_label: Label | None = None) -> Assembled:
    labels, offsets, total = build_label_map(code)
    lay = Layout(labels, runtime_len, total, revert_label)
    out = bytearray()
    smap = []
    for idx, s in enumerate(code):
        for inst in image(s, lay):
            smap.append((len(out), idx))
            out += inst.encode()
    if len(out) != total:
        raise InternalError("image sizes changed between layout and emission")
    return Assembled(bytes(out), offsets, labels, smap)


def abi_args(args) -> bytes:
    return b"".join((as_word(a) if not isinstance(a, int) else a).to_bytes(32, "big") for a in args)


def wrap_deployment(constructor: bytes, runtime: bytes, args=()) -> bytes:
    return constructor + runtime + abi_args(args)


def disassemble(code: bytes) -> list:
    return [i for _, i in decode(code)]


def assemble_insts(insts) -> bytes:
    return b"".join(i.encode() for i in insts)


def code_from_counter(code: bytes, pc: int) -> list:
    """Instructions decoded from ``pc`` to the end."""
    return [i for _, i in decode(code, pc)]


def format_listing(code: bytes) -> str:
    return "\n".join(f"{pc:04x} {i}" for pc, i in decode(code))


__all__ = ["image", "image_size", "build_label_map", "assemble", "Assembled", "wrap_deployment",
           "disassemble", "code_from_counter", "abi_args", "format_listing"]
