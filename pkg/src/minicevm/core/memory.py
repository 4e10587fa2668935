"""Storage layout, the path-to-hash-key map, and the two-region memory."""
from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import LocalRoot, TypeMismatch, UnknownIdent
from .types import Tarray, Thashmap, Tint, Tstruct, Tvoid, resolve
from .values import (Eid, Field, Global, Index, Lhash1, Lhash2, Local, Pair,
                     Singleton, Vint, Vunit, VUNIT, VZERO, path_root)


@dataclass(frozen=True)
class StorageLayout:
    """Globals get slots 0, 1, 2, ... in declaration order."""
    globals: tuple                 # ((name, type), ...)
    composites: dict = field(default_factory=dict, hash=False, compare=False)

    @classmethod
    def of_program(cls, p):
        return cls(tuple(p.globals), dict(p.composites))

    def slot(self, name: str) -> int:
        for i, (g, _) in enumerate(self.globals):
            if g == name:
                return i
        raise UnknownIdent(f"unknown global {name}")

    def type_of(self, name: str):
        return self.globals[self.slot(name)][1]


def path_type(path, layout: StorageLayout):
    """Type reached by following a Global-rooted path."""
    t = type(path)
    if t is Global:
        return resolve(layout.type_of(path.ident), layout.composites)
    if t is Local:
        raise LocalRoot(f"local {path.ident} has no storage type")
    base = path_type(path.path, layout)
    if t is Index:
        if type(base) is Thashmap:
            return resolve(base.elem, layout.composites)
        if type(base) is Tarray:
            return resolve(base.elem, layout.composites)
        raise TypeMismatch(f"index step on non-indexable type {base}")
    if type(base) is not Tstruct:
        raise TypeMismatch(f"field step on non-struct type {base}")
    try:
        return resolve(base.field_type(path.ident), layout.composites)
    except KeyError:
        raise UnknownIdent(f"struct {base.name} has no field {path.ident}") from None


def eid_to_hashkey(path, layout: StorageLayout):
    t = type(path)
    if t is Global:
        return Singleton(layout.slot(path.ident))
    if t is Local:
        raise LocalRoot(f"path rooted at local {path.ident} has no storage key")
    if t is Index:
        return Pair(eid_to_hashkey(path.path, layout), path.key)
    if t is Field:
        base = path_type(path.path, layout)
        if type(base) is not Tstruct:
            raise TypeMismatch(f"field {path.ident} applied to {base}")
        try:
            ordinal = base.field_index(path.ident)
        except KeyError:
            raise UnknownIdent(f"struct {base.name} has no field {path.ident}") from None
        return Pair(eid_to_hashkey(path.path, layout), ordinal)
    raise TypeError(f"not an extended identifier: {path!r}")


def lvalue_hashkey(l, layout: StorageLayout):
    t = type(l)
    if t is Eid:
        return eid_to_hashkey(l.path, layout)
    if t is Lhash1:
        return Singleton(l.key)
    if t is Lhash2:
        return Pair(lvalue_hashkey(l.base, layout), l.key)
    raise TypeError(f"not an l-value: {l!r}")


def is_storage_lvalue(l) -> bool:
    if type(l) is Eid:
        return type(path_root(l.path)) is Global
    return True


def zero_of(ty):
    if type(ty) is Tint:
        return VZERO
    if type(ty) is Tvoid:
        return VUNIT
    raise TypeMismatch(f"no scalar zero for aggregate type {ty}")


def check_shape(v, ty):
    if type(ty) is Tint:
        if type(v) is Vunit:
            raise TypeMismatch(f"unit value where {ty} expected")
        if type(v) is Vint and v.n >= (1 << ty.width):
            raise TypeMismatch(f"{v} does not fit in {ty.width} bits")
    elif type(ty) is Tvoid:
        if type(v) is not Vunit:
            raise TypeMismatch(f"{v} where unit expected")
    else:
        raise TypeMismatch(f"cannot store a scalar at aggregate type {ty}")


@dataclass(frozen=True)
class Memory:
    """Volatile region keyed by l-value, persistent region keyed by hash key."""
    layout: StorageLayout
    volatile: dict = field(default_factory=dict)
    storage: dict = field(default_factory=dict)


def mem_read(m: Memory, l, ty):
    if is_storage_lvalue(l):
        v = m.storage.get(lvalue_hashkey(l, m.layout))
    else:
        v = m.volatile.get(l)
    if v is None:
        return zero_of(ty)
    check_shape(v, ty)
    return v


def mem_write(m: Memory, l, v) -> Memory:
    if is_storage_lvalue(l):
        if type(l) is Eid:
            check_shape(v, path_type(l.path, m.layout))
        elif type(v) is Vunit:
            raise TypeMismatch("unit value written to storage")
        key = lvalue_hashkey(l, m.layout)
        st = dict(m.storage)
        st[key] = v
        return Memory(m.layout, m.volatile, st)
    vol = dict(m.volatile)
    vol[l] = v
    return Memory(m.layout, vol, m.storage)


def storage_words(storage: dict) -> dict:
    """HashKey-keyed storage with zero bindings dropped, for comparisons."""
    return {k: v for k, v in storage.items() if not (type(v) is Vint and v.n == 0)}
