"""Runtime values shared by all interpreters above the EVM.

Hashes stay symbolic: ``Vhash2(base, key)`` is never computed, it is a tree.
Two trees are equal only when they are structurally equal, which is the
no-collision assumption the compiler relies on.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

WORD_BITS = 256
MODULUS = 1 << WORD_BITS
MASK = MODULUS - 1
ADDRESS_MASK = (1 << 160) - 1


@dataclass(frozen=True, slots=True)
class Vunit:
    def __repr__(self):
        return "Vunit"


@dataclass(frozen=True, slots=True)
class Vint:
    n: int

    def __post_init__(self):
        if not (0 <= self.n < MODULUS):
            raise ValueError(f"Vint payload out of range: {self.n}")

    def __repr__(self):
        return f"Vint({self.n})"


@dataclass(frozen=True, slots=True)
class Vhash:
    v: "Value"


@dataclass(frozen=True, slots=True)
class Vhash2:
    v1: "Value"
    v2: "Value"


Value = Union[Vunit, Vint, Vhash, Vhash2]

VUNIT = Vunit()
VZERO = Vint(0)
VONE = Vint(1)


def vint(n: int) -> Vint:
    """Build a word, wrapping modulo 2^256."""
    return Vint(n & MASK)


def vbool(b: bool) -> Vint:
    return VONE if b else VZERO


def as_word(v) -> int:
    """Numeric payload of a value. Vunit reads as 0; hashes have none."""
    if type(v) is Vint:
        return v.n
    if type(v) is Vunit:
        return 0
    raise TypeError(f"value {v!r} has no numeric payload")


@dataclass(frozen=True, slots=True)
class Label:
    """Code label, qualified with the function that owns it."""
    fn: str
    name: str

    def __str__(self):
        return f"{self.fn}.{self.name}"


# ---------------------------------------------------------------- hash keys

@dataclass(frozen=True, slots=True)
class Singleton:
    slot: int


@dataclass(frozen=True, slots=True)
class Pair:
    base: "HashKey"
    key: int


HashKey = Union[Singleton, Pair]


def hashkey_to_value(h: HashKey) -> Value:
    """The symbolic pointer value an IR program computes for ``h``."""
    if type(h) is Singleton:
        return Vint(h.slot)
    return Vhash2(hashkey_to_value(h.base), Vint(h.key))


def value_to_hashkey(v: Value) -> HashKey | None:
    if type(v) is Vint:
        return Singleton(v.n)
    if type(v) is Vhash2 and type(v.v2) is Vint:
        base = value_to_hashkey(v.v1)
        if base is not None:
            return Pair(base, v.v2.n)
    return None


# ------------------------------------------------------ extended identifiers

@dataclass(frozen=True, slots=True)
class Global:
    ident: str


@dataclass(frozen=True, slots=True)
class Local:
    ident: str


@dataclass(frozen=True, slots=True)
class Field:
    path: "ExtendedIdentifier"
    ident: str


@dataclass(frozen=True, slots=True)
class Index:
    path: "ExtendedIdentifier"
    key: int


ExtendedIdentifier = Union[Global, Local, Field, Index]


def path_root(p: ExtendedIdentifier):
    while type(p) in (Field, Index):
        p = p.path
    return p


@dataclass(frozen=True, slots=True)
class Eid:
    path: ExtendedIdentifier


@dataclass(frozen=True, slots=True)
class Lhash1:
    key: int


@dataclass(frozen=True, slots=True)
class Lhash2:
    base: "LValue"
    key: int


LValue = Union[Eid, Lhash1, Lhash2]
