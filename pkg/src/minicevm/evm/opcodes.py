"""Opcode table for the implemented EVM subset."""
from __future__ import annotations

from dataclasses import dataclass

from . import fees as F

# opcode -> (mnemonic, pops, pushes, static gas)
OPCODES = {
    0x00: ("STOP", 0, 0, 0),
    0x01: ("ADD", 2, 1, F.G_VERYLOW),
    0x02: ("MUL", 2, 1, F.G_LOW),
    0x03: ("SUB", 2, 1, F.G_VERYLOW),
    0x04: ("DIV", 2, 1, F.G_LOW),
    0x06: ("MOD", 2, 1, F.G_LOW),
    0x10: ("LT", 2, 1, F.G_VERYLOW),
    0x11: ("GT", 2, 1, F.G_VERYLOW),
    0x14: ("EQ", 2, 1, F.G_VERYLOW),
    0x15: ("ISZERO", 1, 1, F.G_VERYLOW),
    0x16: ("AND", 2, 1, F.G_VERYLOW),
    0x17: ("OR", 2, 1, F.G_VERYLOW),
    0x18: ("XOR", 2, 1, F.G_VERYLOW),
    0x19: ("NOT", 1, 1, F.G_VERYLOW),
    0x20: ("SHA3", 2, 1, F.G_SHA3),
    0x30: ("ADDRESS", 0, 1, F.G_BASE),
    0x31: ("BALANCE", 1, 1, F.G_BALANCE),
    0x33: ("CALLER", 0, 1, F.G_BASE),
    0x34: ("CALLVALUE", 0, 1, F.G_BASE),
    0x35: ("CALLDATALOAD", 1, 1, F.G_VERYLOW),
    0x36: ("CALLDATASIZE", 0, 1, F.G_BASE),
    0x37: ("CALLDATACOPY", 3, 0, F.G_VERYLOW),
    0x38: ("CODESIZE", 0, 1, F.G_BASE),
    0x39: ("CODECOPY", 3, 0, F.G_VERYLOW),
    0x43: ("NUMBER", 0, 1, F.G_BASE),
    0x50: ("POP", 1, 0, F.G_BASE),
    0x51: ("MLOAD", 1, 1, F.G_VERYLOW),
    0x52: ("MSTORE", 2, 0, F.G_VERYLOW),
    0x54: ("SLOAD", 1, 1, F.G_SLOAD),
    0x55: ("SSTORE", 2, 0, 0),
    0x56: ("JUMP", 1, 0, F.G_MID),
    0x57: ("JUMPI", 2, 0, F.G_HIGH),
    0x5B: ("JUMPDEST", 0, 0, F.G_JUMPDEST),
    0xF1: ("CALL", 7, 1, F.G_CALL),
    0xF3: ("RETURN", 2, 0, 0),
    0xFD: ("REVERT", 2, 0, 0),
}
for _n in range(1, 33):
    OPCODES[0x5F + _n] = (f"PUSH{_n}", 0, 1, F.G_VERYLOW)
for _n in range(1, 17):
    OPCODES[0x7F + _n] = (f"DUP{_n}", _n, _n + 1, F.G_VERYLOW)
    OPCODES[0x8F + _n] = (f"SWAP{_n}", _n + 1, _n + 1, F.G_VERYLOW)
for _n in range(5):
    OPCODES[0xA0 + _n] = (f"LOG{_n}", 2 + _n, 0, F.G_LOG + _n * F.G_LOGTOPIC)

BY_NAME = {v[0]: k for k, v in OPCODES.items()}


def is_push(op: int) -> bool:
    return 0x60 <= op <= 0x7F


@dataclass(frozen=True, slots=True)
class Inst:
    op: int
    imm: int | None = None

    @property
    def name(self) -> str:
        info = OPCODES.get(self.op)
        return info[0] if info else f"INVALID_{self.op:02x}"

    @property
    def size(self) -> int:
        return 1 + (self.op - 0x5F if is_push(self.op) else 0)

    def encode(self) -> bytes:
        if is_push(self.op):
            n = self.op - 0x5F
            return bytes([self.op]) + (self.imm or 0).to_bytes(n, "big")
        return bytes([self.op])

    def __str__(self):
        if is_push(self.op):
            n = self.op - 0x5F
            return f"{self.name} 0x{self.imm or 0:0{2 * n}x}"
        return self.name


def push(value: int, width: int | None = None) -> Inst:
    """PUSHn with the minimal width (at least one byte) unless given."""
    if width is None:
        width = max(1, (value.bit_length() + 7) // 8)
    if value >= 1 << (8 * width):
        raise ValueError(f"{value} does not fit in PUSH{width}")
    return Inst(0x5F + width, value)


def op(name: str) -> Inst:
    return Inst(BY_NAME[name])


def dup(n: int) -> Inst:
    return Inst(0x7F + n)


def swap(n: int) -> Inst:
    return Inst(0x8F + n)


def decode(code: bytes, start: int = 0) -> list:
    """Linear sweep from ``start``; truncated push immediates are zero-padded."""
    out = []
    pc = start
    n = len(code)
    while pc < n:
        b = code[pc]
        if is_push(b):
            w = b - 0x5F
            raw = code[pc + 1:pc + 1 + w]
            imm = int.from_bytes(raw + bytes(w - len(raw)), "big")
            out.append((pc, Inst(b, imm)))
            pc += 1 + w
        else:
            out.append((pc, Inst(b)))
            pc += 1
    return out
