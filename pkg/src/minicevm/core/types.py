"""MiniC type representation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union


@dataclass(frozen=True, slots=True)
class Tvoid:
    pass


@dataclass(frozen=True, slots=True)
class Tint:
    width: int = 256
    signed: bool = False


@dataclass(frozen=True, slots=True)
class Tpointer:
    region: str
    elem: "MiniCType"


@dataclass(frozen=True, slots=True)
class Tarray:
    elem: "MiniCType"
    length: int

    def __post_init__(self):
        if self.length < 0:
            raise ValueError("array length must be non-negative")


@dataclass(frozen=True, slots=True)
class Thashmap:
    key: "MiniCType"
    elem: "MiniCType"


@dataclass(frozen=True, slots=True)
class Tfunction:
    params: tuple
    ret: "MiniCType"


@dataclass(frozen=True, slots=True)
class Tstruct:
    name: str
    fields: tuple  # ((name, type), ...)

    def __post_init__(self):
        names = [f for f, _ in self.fields]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate field in struct {self.name}")

    def field_index(self, name: str) -> int:
        for i, (f, _) in enumerate(self.fields):
            if f == name:
                return i
        raise KeyError(name)

    def field_type(self, name: str) -> "MiniCType":
        return self.fields[self.field_index(name)][1]


@dataclass(frozen=True, slots=True)
class Tunion:
    name: str
    fields: tuple

    def __post_init__(self):
        names = [f for f, _ in self.fields]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate field in union {self.name}")

    def field_type(self, name: str) -> "MiniCType":
        for f, t in self.fields:
            if f == name:
                return t
        raise KeyError(name)


@dataclass(frozen=True, slots=True)
class Tcomp_ptr:
    name: str


MiniCType = Union[Tvoid, Tint, Tpointer, Tarray, Thashmap, Tfunction, Tstruct, Tunion, Tcomp_ptr]

TVOID = Tvoid()
TINT = Tint(256, False)


def is_word(t) -> bool:
    return type(t) is Tint


def resolve(t, composites: dict):
    """Follow a Tcomp_ptr through the composite-type table."""
    if type(t) is Tcomp_ptr:
        if t.name not in composites:
            raise KeyError(f"unknown composite type {t.name}")
        return composites[t.name]
    return t
