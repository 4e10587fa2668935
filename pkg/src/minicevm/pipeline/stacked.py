"""Stacked code: temps live on the EVM stack.

With ``k`` slots, slot ``i`` sits ``k-1-i`` entries below the top at every
statement boundary. ``Krvalue(e)`` evaluates ``e`` in one step and pushes the
result; inside ``e`` a temp is an offset from the top as it was when the
statement started. The flag is False for storage addresses pushed as the
target of an ``Ksstore``; evaluation is the same either way.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .. import gastable as G
from ..core import ast as A
from ..core.values import VUNIT, VZERO, Label, as_word
from ..errors import CallInConstructor, InternalError, StuckState, UnresolvedLabel
from .cbasic import (JUMP, JUMPI, PUSHLABEL, Bassign, Bcall, Bdone, Bfetchargs, Bintro, Bjump,
                     Bjumpi, Blabel, Blog, Brevert, Bset, Btransfer)
from .clike import done_cost
from .clinear import ClFunction, ClProgram, dispatch_gas, entry_label
from .runtime import Finalstate, Genv, Initialstate, eval_clike, sstore, store_cost_args


@dataclass(frozen=True)
class Klabel:
    label: Label


@dataclass(frozen=True)
class Kpushlabel:
    label: Label


@dataclass(frozen=True)
class Krvalue:
    e: object
    rvalue: bool = True


@dataclass(frozen=True)
class Ksstore:
    pass


@dataclass(frozen=True)
class Kset:
    depth: int


@dataclass(frozen=True)
class Kpop:
    pass


@dataclass(frozen=True)
class Kjump:
    label: Label


@dataclass(frozen=True)
class Kjumpi:
    label: Label


@dataclass(frozen=True)
class Kcall:
    fn: str


@dataclass(frozen=True)
class Kfetchargs:
    n: int


@dataclass(frozen=True)
class Kintro:
    n: int


@dataclass(frozen=True)
class Kdone:
    has_value: bool


@dataclass(frozen=True)
class Ktransfer:
    pass


@dataclass(frozen=True)
class Klog:
    ntopics: int
    ndata: int


@dataclass(frozen=True)
class Krevert:
    pass


@dataclass
class StFunction:
    name: str
    kind: A.FunctionKind
    nparams: int
    nslots: int
    code: list
    returns: bool = False
    abi_signature: str = ""
    selector: object = None


@dataclass
class StProgram:
    name: str
    functions: dict
    nmethods: int
    events: dict = field(default_factory=dict)


def shift(e, k: int, h: int):
    """Rename slot temps to stack offsets for a statement-start height ``h``."""
    t = type(e)
    if t is A.Etemp:
        return A.Etemp(k - 1 - e.id + h, e.ty)
    if t is A.Ebinop:
        return A.Ebinop(e.op, shift(e.e1, k, h), shift(e.e2, k, h), e.ty)
    if t is A.Eunop:
        return A.Eunop(e.op, shift(e.e, k, h), e.ty)
    if t is A.Ederef:
        return A.Ederef(shift(e.e, k, h), e.ty)
    if t is A.Ecall1:
        return A.Ecall1(e.builtin, shift(e.e, k, h), e.ty)
    return e


def to_stacked(f: ClFunction, returns: dict) -> StFunction:
    """``returns`` maps function names to whether they return a value."""
    k = f.nslots
    out = []
    for s in f.code:
        t = type(s)
        if t is Blabel:
            out.append(Klabel(s.label))
        elif t is Bfetchargs:
            out.append(Kfetchargs(s.n))
        elif t is Bintro:
            out.append(Kintro(s.n))
        elif t is Bset:
            out += [Krvalue(shift(s.e, k, 0)), Kset(k - 1 - s.temp)]
        elif t is Bassign:
            out += [Krvalue(shift(s.rhs, k, 0)), Krvalue(shift(s.addr, k, 1), False),
                    Ksstore()]
        elif t is Btransfer:
            out += [Krvalue(shift(s.amount, k, 0)), Krvalue(shift(s.to, k, 1)), Ktransfer()]
        elif t is Blog:
            items = list(reversed(s.topics)) + list(reversed(s.data))
            out += [Krvalue(shift(e, k, h)) for h, e in enumerate(items)]
            out.append(Klog(len(s.topics), len(s.data)))
        elif t is Bjump:
            out.append(Kjump(s.target))
        elif t is Bjumpi:
            out += [Krvalue(shift(s.cond, k, 0)), Kjumpi(s.target)]
        elif t is Bcall:
            if f.kind == A.FunctionKind.CONSTRUCTOR:
                raise CallInConstructor(f"constructor calls {s.fn}; calls from the constructor are prohibited")
            out.append(Kpushlabel(s.cont))
            out += [Krvalue(shift(a, k, 1 + i)) for i, a in enumerate(s.args)]
            out += [Kcall(s.fn), Klabel(s.cont)]
            if returns[s.fn]:
                out.append(Kset(k - 1 - s.ret) if s.ret is not None else Kpop())
        elif t is Bdone:
            if s.e is not None:
                out.append(Krvalue(shift(s.e, k, 0)))
            out.append(Kdone(s.e is not None))
        elif t is Brevert:
            out.append(Krevert())
        else:
            raise InternalError(f"no Stacked form for {s!r}")
    return StFunction(f.name, f.kind, len(f.params), k, out, f.returns_value(), f.abi_signature,
                      f.selector)


def stacked_program(p: ClProgram) -> StProgram:
    returns = {n: f.returns_value() for n, f in p.functions.items()}
    return StProgram(p.name, {n: to_stacked(f, returns) for n, f in p.functions.items()},
                     p.nmethods, dict(p.events))


# --------------------------------------------------------------- interpreter

@dataclass
class StackState:
    fn: StFunction
    pc: int
    stack: list           # Values and Labels, top is last


class _Frame:
    """Adapter so Clike expression evaluation reads stack offsets as temps."""
    __slots__ = ("stack",)

    def __init__(self, stack):
        self.stack = stack

    def __getitem__(self, off):
        try:
            return self.stack[-1 - off]
        except IndexError:
            raise StuckState(f"stack offset {off} beyond depth {len(self.stack)}") from None


def label_table(p: StProgram) -> dict:
    table = {}
    for f in p.functions.values():
        for i, s in enumerate(f.code):
            if type(s) is Klabel:
                table[s.label] = (f.name, i)
    return table


def _pop(stack):
    if not stack:
        raise StuckState("stack underflow")
    return stack.pop()


def step(genv: Genv, st):
    p = genv.program
    if type(st) is Initialstate:
        fn = p.functions[st.fn]
        if fn.kind == A.FunctionKind.METHOD:
            genv.gas += dispatch_gas(p.nmethods)
        if not hasattr(genv, "labels"):
            genv.labels = label_table(p)
        return StackState(fn, 0, [])
    fn, stack = st.fn, st.stack
    if st.pc >= len(fn.code):
        raise StuckState(f"{fn.name}: control ran past the end of the code")
    s = fn.code[st.pc]
    t = type(s)
    st.pc += 1
    if t is Krvalue:
        e = s.e
        genv.gas += G.clike_expr(e)
        stack.append(eval_clike(e, _Frame(stack), genv))
        return st
    if t is Klabel:
        genv.gas += G.NODE
        return st
    if t is Kset:
        genv.gas += G.SET
        v = _pop(stack)
        if s.depth >= len(stack):
            raise StuckState("set below the stack bottom")
        stack[-1 - s.depth] = v
        return st
    if t is Kpop:
        genv.gas += 2
        _pop(stack)
        return st
    if t is Ksstore:
        addr = _pop(stack)
        v = _pop(stack)
        old, new = store_cost_args(genv.storage, addr, v)
        genv.gas += G.sstore(old, new)
        sstore(genv.storage, addr, v)
        return st
    if t is Kpushlabel:
        genv.gas += PUSHLABEL
        stack.append(s.label)
        return st
    if t is Kjump:
        genv.gas += JUMP
        return _goto(genv, st, s.label)
    if t is Kjumpi:
        genv.gas += JUMPI
        if as_word(_pop(stack)):
            return _goto(genv, st, s.label)
        return st
    if t is Kcall:
        genv.gas += JUMP
        return _goto(genv, st, entry_label(s.fn))
    if t is Kfetchargs:
        per = G.TABLE["fetcharg_method"] if fn.kind == A.FunctionKind.METHOD else G.TABLE["fetcharg_constructor"]
        genv.gas += per * s.n
        stack.extend(genv.args[:s.n])
        return st
    if t is Kintro:
        genv.gas += G.TABLE["intro_per_slot"] * s.n
        stack.extend([VZERO] * s.n)
        return st
    if t is Kdone:
        genv.gas += done_cost(genv, fn, fn.nslots, s.has_value)
        v = _pop(stack) if s.has_value else VUNIT
        if fn.kind != A.FunctionKind.PRIVATE:
            return Finalstate(True, v)
        for _ in range(fn.nslots):
            _pop(stack)
        ret = _pop(stack)
        if type(ret) is not Label:
            raise StuckState(f"return to non-label {ret!r}")
        if s.has_value:
            stack.append(v)
        return _goto(genv, st, ret)
    if t is Ktransfer:
        to = as_word(_pop(stack))
        amount = as_word(_pop(stack))
        ok = genv.env.transfer(to, amount)
        genv.gas += G.transfer(amount, ok)
        if not ok:
            return Finalstate(False, reason="transfer failed")
        return st
    if t is Klog:
        data = tuple(as_word(_pop(stack)) for _ in range(s.ndata))
        topics = tuple(as_word(_pop(stack)) for _ in range(s.ntopics))
        genv.gas += G.log(s.ntopics, s.ndata)
        genv.events.append((topics, data))
        return st
    if t is Krevert:
        genv.gas += G.REVERT
        return Finalstate(False, reason="revert")
    raise InternalError(f"Stacked cannot step {s!r}")


def _goto(genv, st, label):
    try:
        fname, idx = genv.labels[label]
    except KeyError:
        raise UnresolvedLabel(f"unresolved label {label}") from None
    st.fn = genv.program.functions[fname]
    st.pc = idx
    return st
