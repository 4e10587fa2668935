"""Basic blocks: each CFG node becomes a block with an explicit terminator.

The statement classes here are shared with Clinear, which adds labels and
the entry-point statements ``Bfetchargs``/``Bintro``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .. import gastable as G
from ..core import ast as A
from ..core.values import VUNIT, Label, as_word
from ..errors import InternalError
from . import cgraph as C
from .clike import done_cost, initial_gas
from .runtime import (Callstate, Finalstate, Genv, Initialstate, Returnstate, eval_clike,
                      sstore, store_cost_args)

JUMPI = G.COND - G.EDGE          # PUSH2 + JUMPI
PUSHLABEL = G.CONST
JUMP = G.EDGE                    # PUSH2 + JUMP


@dataclass(frozen=True)
class Bset:
    temp: int
    e: object


@dataclass(frozen=True)
class Bassign:
    addr: object
    rhs: object


@dataclass(frozen=True)
class Btransfer:
    to: object
    amount: object


@dataclass(frozen=True)
class Blog:
    topics: tuple
    data: tuple


@dataclass(frozen=True)
class Bjump:
    target: object


@dataclass(frozen=True)
class Bjumpi:
    cond: object
    target: object


@dataclass(frozen=True)
class Bcall:
    ret: object
    fn: str
    args: tuple
    cont: object                 # Cbasic: successor block; Clinear: return label


@dataclass(frozen=True)
class Bdone:
    e: object


@dataclass(frozen=True)
class Brevert:
    pass


@dataclass(frozen=True)
class Blabel:
    label: object


@dataclass(frozen=True)
class Bfetchargs:
    n: int


@dataclass(frozen=True)
class Bintro:
    n: int


TERMINATORS = (Bjump, Bcall, Bdone, Brevert)


@dataclass
class CbFunction:
    name: str
    kind: A.FunctionKind
    params: list
    temps: dict
    blocks: dict                 # node id -> [statements]
    entry: int
    ret_type: object = None
    abi_signature: str = ""
    selector: object = None

    def returns_value(self):
        return A.Function.returns_value(self)


@dataclass
class CbProgram:
    name: str
    functions: dict
    nmethods: int
    events: dict = field(default_factory=dict)

    def methods(self):
        return [f for f in self.functions.values() if f.kind == A.FunctionKind.METHOD]


def block_of(n) -> list:
    t = type(n)
    if t is C.Nskip:
        return [Bjump(n.succ)]
    if t is C.Nset:
        return [Bset(n.temp, n.e), Bjump(n.succ)]
    if t is C.Nassign:
        return [Bassign(n.addr, n.rhs), Bjump(n.succ)]
    if t is C.Ntransfer:
        return [Btransfer(n.to, n.amount), Bjump(n.succ)]
    if t is C.Nlog:
        return [Blog(n.topics, n.data), Bjump(n.succ)]
    if t is C.Ncond:
        return [Bjumpi(n.cond, n.ifso), Bjump(n.ifnot)]
    if t is C.Ncall:
        return [Bcall(n.ret, n.fn, n.args, n.succ)]
    if t is C.Nreturn:
        return [Bdone(n.e)]
    if t is C.Nrevert:
        return [Brevert()]
    raise InternalError(f"no block for {n!r}")


def to_cbasic(g: C.CgFunction) -> CbFunction:
    blocks = {i: block_of(n) for i, n in sorted(g.nodes.items())}
    return CbFunction(g.name, g.kind, list(g.params), dict(g.temps), blocks, g.entry, g.ret_type,
                      g.abi_signature, g.selector)


def cbasic_program(p: C.CgProgram) -> CbProgram:
    return CbProgram(p.name, {n: to_cbasic(f) for n, f in p.functions.items()}, p.nmethods,
                     dict(p.events))


# ----------------------------------------------------------- shared semantics

def exec_simple(genv: Genv, s, temps) -> bool:
    """Run a non-control statement; False means the transaction reverts."""
    t = type(s)
    if t is Bset:
        genv.gas += G.clike_expr(s.e) + G.SET
        temps[s.temp] = eval_clike(s.e, temps, genv)
        return True
    if t is Bassign:
        addr = eval_clike(s.addr, temps, genv)
        v = eval_clike(s.rhs, temps, genv)
        old, new = store_cost_args(genv.storage, addr, v)
        genv.gas += G.clike_expr(s.addr) + G.clike_expr(s.rhs) + G.sstore(old, new)
        sstore(genv.storage, addr, v)
        return True
    if t is Btransfer:
        to = as_word(eval_clike(s.to, temps, genv))
        amount = as_word(eval_clike(s.amount, temps, genv))
        ok = genv.env.transfer(to, amount)
        genv.gas += G.clike_expr(s.to) + G.clike_expr(s.amount) + G.transfer(amount, ok)
        return ok
    if t is Blog:
        topics = tuple(as_word(eval_clike(e, temps, genv)) for e in s.topics)
        data = tuple(as_word(eval_clike(e, temps, genv)) for e in s.data)
        genv.gas += sum(G.clike_expr(e) for e in s.topics + s.data) + G.log(len(topics), len(data))
        genv.events.append((topics, data))
        return True
    raise InternalError(f"not a simple statement: {s!r}")


# --------------------------------------------------------------- interpreter

@dataclass
class BlockState:
    fn: CbFunction
    block: int
    idx: int
    temps: dict
    stack: list


def _enter(genv, fn, block, temps, stack):
    genv.gas += G.NODE
    return BlockState(fn, block, 0, temps, stack)


def step(genv: Genv, st):
    p = genv.program
    if type(st) is Initialstate:
        fn = p.functions[st.fn]
        genv.gas += initial_gas(p, fn, len(genv.args), len(fn.temps))
        return Callstate(st.fn, list(genv.args), [])
    if type(st) is Callstate:
        fn = p.functions[st.fn]
        return _enter(genv, fn, fn.entry, dict(zip(fn.params, st.args)), st.stack)
    if type(st) is Returnstate:
        if not st.stack:
            return Finalstate(True, st.value)
        fn, succ, temps, ret = st.stack[-1]
        if ret is not None:
            temps[ret] = st.value
        return _enter(genv, fn, succ, temps, st.stack[:-1])
    fn, temps = st.fn, st.temps
    s = fn.blocks[st.block][st.idx]
    t = type(s)
    if t is Bjump:
        genv.gas += JUMP
        return _enter(genv, fn, s.target, temps, st.stack)
    if t is Bjumpi:
        genv.gas += G.clike_expr(s.cond) + JUMPI
        if as_word(eval_clike(s.cond, temps, genv)):
            return _enter(genv, fn, s.target, temps, st.stack)
        st.idx += 1
        return st
    if t is Bcall:
        callee = p.functions[s.fn]
        args = [eval_clike(a, temps, genv) for a in s.args]
        genv.gas += (sum(G.clike_expr(a) for a in s.args) + G.call_entry(len(callee.temps), len(args))
                     + G.call_return(s.ret is not None) + JUMP)
        return Callstate(s.fn, args, st.stack + [(fn, s.cont, temps, s.ret)])
    if t is Bdone:
        has_value = s.e is not None
        genv.gas += (G.clike_expr(s.e) if has_value else 0) + done_cost(genv, fn, len(fn.temps), has_value)
        return Returnstate(eval_clike(s.e, temps, genv) if has_value else VUNIT, st.stack)
    if t is Brevert:
        genv.gas += G.REVERT
        return Finalstate(False, reason="revert")
    if not exec_simple(genv, s, temps):
        return Finalstate(False, reason="transfer failed")
    st.idx += 1
    return st
