"""MiniC abstract syntax.

Clike reuses these classes unchanged: the two languages share syntax and
differ only in how expressions are evaluated (Clike has no implicit
dereference, storage addresses are explicit hash computations).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

from .types import MiniCType, TINT, TVOID, Tvoid

UNOPS = ("not", "bitnot", "sha1")
BINOPS = ("add", "sub", "mul", "div", "mod", "eq", "ne", "lt", "gt", "le", "ge",
          "and", "or", "xor", "sha2")
ARITH_OPS = ("add", "sub", "mul")
DIV_OPS = ("div", "mod")
COMMUTATIVE = frozenset(("add", "mul", "and", "or", "xor", "eq", "ne"))
BUILTIN0 = ("address", "caller", "callvalue", "number")
BUILTIN1 = ("balance",)


# ---------------------------------------------------------------- expressions

@dataclass(frozen=True, slots=True)
class Eint:
    value: int
    ty: MiniCType = TINT


@dataclass(frozen=True, slots=True)
class Eint256:
    value: int
    ty: MiniCType = TINT


@dataclass(frozen=True, slots=True)
class Evar:
    name: str
    ty: MiniCType


@dataclass(frozen=True, slots=True)
class Eglob:
    name: str
    ty: MiniCType


@dataclass(frozen=True, slots=True)
class Etemp:
    id: int
    ty: MiniCType = TINT


@dataclass(frozen=True, slots=True)
class Ederef:
    e: "Expr"
    ty: MiniCType


@dataclass(frozen=True, slots=True)
class Eaddr:
    e: "Expr"
    ty: MiniCType


@dataclass(frozen=True, slots=True)
class Eunop:
    op: str
    e: "Expr"
    ty: MiniCType = TINT


@dataclass(frozen=True, slots=True)
class Ebinop:
    op: str
    e1: "Expr"
    e2: "Expr"
    ty: MiniCType = TINT


@dataclass(frozen=True, slots=True)
class Efield:
    e: "Expr"
    name: str
    ty: MiniCType


@dataclass(frozen=True, slots=True)
class Eindex:
    e: "Expr"
    idx: "Expr"
    ty: MiniCType


@dataclass(frozen=True, slots=True)
class Ecall0:
    builtin: str
    ty: MiniCType = TINT


@dataclass(frozen=True, slots=True)
class Ecall1:
    builtin: str
    e: "Expr"
    ty: MiniCType = TINT


Expr = Union[Eint, Eint256, Evar, Eglob, Etemp, Ederef, Eaddr, Eunop, Ebinop,
             Efield, Eindex, Ecall0, Ecall1]


# ----------------------------------------------------------------- statements

@dataclass(frozen=True, slots=True)
class Sskip:
    pass


@dataclass(frozen=True, slots=True)
class Sassign:
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True, slots=True)
class Sset:
    temp: int
    e: Expr


@dataclass(frozen=True, slots=True)
class Scall:
    ret: Optional[int]
    fn: str
    args: tuple


@dataclass(frozen=True, slots=True)
class Ssequence:
    s1: "Stmt"
    s2: "Stmt"


@dataclass(frozen=True, slots=True)
class Sifthenelse:
    cond: Expr
    s1: "Stmt"
    s2: "Stmt"


@dataclass(frozen=True, slots=True)
class Sloop:
    body: "Stmt"


@dataclass(frozen=True, slots=True)
class Sbreak:
    pass


@dataclass(frozen=True, slots=True)
class Sreturn:
    e: Optional[Expr]


@dataclass(frozen=True, slots=True)
class Stransfer:
    to: Expr
    amount: Expr


@dataclass(frozen=True, slots=True)
class Scallmethod:
    addr: Expr
    rets: tuple
    selector: int
    value: Expr
    args: tuple


@dataclass(frozen=True, slots=True)
class Slog:
    topics: tuple
    data: tuple


@dataclass(frozen=True, slots=True)
class Srevert:
    pass


Stmt = Union[Sskip, Sassign, Sset, Scall, Ssequence, Sifthenelse, Sloop, Sbreak,
             Sreturn, Stransfer, Scallmethod, Slog, Srevert]

SKIP = Sskip()


def seq(*stmts) -> Stmt:
    """Right-nested sequence, dropping skips."""
    stmts = [s for s in stmts if not isinstance(s, Sskip)]
    if not stmts:
        return SKIP
    out = stmts[-1]
    for s in reversed(stmts[:-1]):
        out = Ssequence(s, out)
    return out


def flatten_seq(s: Stmt) -> list:
    if isinstance(s, Ssequence):
        return flatten_seq(s.s1) + flatten_seq(s.s2)
    return [s]


# ------------------------------------------------------------------- programs

class FunctionKind(str, Enum):
    CONSTRUCTOR = "constructor"
    METHOD = "method"
    PRIVATE = "private"


@dataclass
class Function:
    name: str
    kind: FunctionKind
    params: list              # temp ids, in argument order
    temps: dict               # id -> (name, type)
    body: Stmt
    ret_type: MiniCType = TVOID
    abi_signature: str = ""   # e.g. "transfer(address,uint256)"
    selector: Optional[int] = None

    def returns_value(self) -> bool:
        return not isinstance(self.ret_type, Tvoid)

    def temp_name(self, t: int) -> str:
        return self.temps[t][0] if t in self.temps else f"t{t}"


@dataclass
class Program:
    name: str
    globals: list                                   # [(name, type)] in slot order
    composites: dict = field(default_factory=dict)  # struct name -> Tstruct
    functions: dict = field(default_factory=dict)   # name -> Function, ordered
    constructor: str = "constructor"
    events: dict = field(default_factory=dict)      # name -> (abi signature, indexed flags)

    def methods(self) -> list:
        return [f for f in self.functions.values() if f.kind == FunctionKind.METHOD]

    def global_type(self, name: str):
        for g, t in self.globals:
            if g == name:
                return t
        return None

    def slot_of(self, name: str) -> int:
        for i, (g, _) in enumerate(self.globals):
            if g == name:
                return i
        raise KeyError(name)
