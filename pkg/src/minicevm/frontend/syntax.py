"""Surface syntax tree produced by the parser."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional


# --------------------------------------------------------------------- types

@dataclass(frozen=True)
class TyName:
    name: str               # int, uint, bool, address, unit, or a struct name


@dataclass(frozen=True)
class TyMapping:
    key: object
    val: object


@dataclass(frozen=True)
class TyArray:
    length: int
    elem: object


# ---------------------------------------------------------------- expressions

@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class UnitLit:
    pass


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str                 # surface operator text, e.g. "+", "/\\", "<>"
    left: object
    right: object


@dataclass(frozen=True)
class UnOp:
    op: str                 # "!" or "~"
    e: object


@dataclass(frozen=True)
class IndexE:
    e: object
    idx: object


@dataclass(frozen=True)
class FieldE:
    e: object
    name: str


@dataclass(frozen=True)
class CallE:
    fn: str
    args: tuple


# ------------------------------------------------------------------- commands

@dataclass(frozen=True)
class Let:
    name: str
    value: object
    body: object


@dataclass(frozen=True)
class Seq:
    first: object
    second: object


@dataclass(frozen=True)
class If:
    cond: object
    then: object
    orelse: Optional[object] = None


@dataclass(frozen=True)
class For:
    var: str
    lo: object
    hi: object
    body: object


@dataclass(frozen=True)
class Assert:
    cond: object


@dataclass(frozen=True)
class Revert:
    pass


@dataclass(frozen=True)
class Assign:
    target: object
    value: object


@dataclass(frozen=True)
class Emit:
    event: str
    args: tuple


@dataclass(frozen=True)
class TransferEth:
    to: object
    amount: object


@dataclass(frozen=True)
class ExprCmd:
    e: object


# --------------------------------------------------------------- declarations

@dataclass(frozen=True)
class StateVar:
    name: str
    ty: object
    init: object            # "mapping_init", "array_init", "struct_init", or an expression


@dataclass(frozen=True)
class Method:
    name: str
    params: tuple           # ((name, type or None), ...)
    ret: Optional[object]
    body: object
    private: bool = False


@dataclass(frozen=True)
class TypeDecl:
    name: str
    fields: tuple           # ((name, type), ...)


@dataclass(frozen=True)
class EventDecl:
    name: str
    params: tuple           # ((type, indexed), ...)


@dataclass(frozen=True)
class SigEntry:
    name: str
    args: tuple             # types
    ret: object
    const: bool = False


@dataclass(frozen=True)
class Signature:
    name: str
    entries: tuple


@dataclass(frozen=True)
class ObjectDecl:
    name: str
    signature: Optional[str]
    members: tuple

    @property
    def state_vars(self):
        return [m for m in self.members if isinstance(m, StateVar)]

    @property
    def methods(self):
        return [m for m in self.members if isinstance(m, Method)]


@dataclass(frozen=True)
class LayerDecl:
    name: str
    underlay: tuple         # names of lower layers; empty in kernel mode
    signature: str
    bindings: tuple         # ((field, object name), ...)


@dataclass(frozen=True)
class SourceUnit:
    decls: tuple = field(default_factory=tuple)

    def of_kind(self, cls):
        return [d for d in self.decls if isinstance(d, cls)]

    @property
    def objects(self):
        return self.of_kind(ObjectDecl)
