"""Linear code: blocks laid out by depth-first traversal.

A block's trailing jump disappears when its target is laid out right after
it, and a block gets a label only if something jumps to it. Function entry
gets a label, argument fetching (``Bfetchargs``) and slot introduction
(``Bintro``).
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .. import gastable as G
from ..core import ast as A
from ..core.values import VUNIT, VZERO, Label, as_word
from ..errors import InternalError
from .cbasic import (JUMP, JUMPI, PUSHLABEL, Bassign, Bcall, Bdone, Bfetchargs, Bintro, Bjump,
                     Bjumpi, Blabel, Blog, Brevert, Bset, Btransfer, CbFunction, CbProgram,
                     exec_simple)
from .clike import done_cost
from .runtime import Callstate, Finalstate, Genv, Initialstate, Returnstate, eval_clike


def entry_label(fn: str) -> Label:
    return Label(fn, "entry")


def block_label(fn: str, b) -> Label:
    return Label(fn, f"n{b}")


def return_label(fn: str, b) -> Label:
    return Label(fn, f"r{b}")


@dataclass
class ClFunction:
    name: str
    kind: A.FunctionKind
    params: list
    temps: dict
    code: list
    ret_type: object = None
    abi_signature: str = ""
    selector: object = None

    @property
    def nslots(self):
        return len(self.temps)

    def returns_value(self):
        return A.Function.returns_value(self)


@dataclass
class ClProgram:
    name: str
    functions: dict
    nmethods: int
    events: dict = field(default_factory=dict)

    def methods(self):
        return [f for f in self.functions.values() if f.kind == A.FunctionKind.METHOD]


def _succs(block) -> list:
    out = []
    for s in block:
        if type(s) in (Bjump, Bjumpi):
            out.append(s.target)
        elif type(s) is Bcall:
            out.append(s.cont)
    return out


def dfs_order(f: CbFunction) -> list:
    order, seen = [], set()
    stack = [f.entry]
    while stack:
        b = stack.pop()
        if b in seen:
            continue
        seen.add(b)
        order.append(b)
        for s in sorted(set(_succs(f.blocks[b])), reverse=True):
            if s not in seen:
                stack.append(s)
    return order


def layout(f: CbFunction, order: list) -> list:
    """Emit blocks in ``order``; returns Clinear statements (block labels unfiltered)."""
    name = f.name
    code = []
    for pos, b in enumerate(order):
        nxt = order[pos + 1] if pos + 1 < len(order) else None
        code.append(Blabel(block_label(name, b)))
        for s in f.blocks[b]:
            t = type(s)
            if t is Bjump:
                if s.target != nxt:
                    code.append(Bjump(block_label(name, s.target)))
            elif t is Bjumpi:
                code.append(Bjumpi(s.cond, block_label(name, s.target)))
            elif t is Bcall:
                code.append(Bcall(s.ret, s.fn, s.args, return_label(name, b)))
                if s.cont != nxt:
                    code.append(Bjump(block_label(name, s.cont)))
            else:
                code.append(s)
    return code


def linearize(f: CbFunction, order: list | None = None) -> ClFunction:
    order = dfs_order(f) if order is None else order
    body = layout(f, order)
    targets = {s.target for s in body if type(s) in (Bjump, Bjumpi)}
    body = [s for s in body if type(s) is not Blabel or s.label in targets]
    head = [Blabel(entry_label(f.name))]
    if f.kind != A.FunctionKind.PRIVATE:
        head.append(Bfetchargs(len(f.params)))
    head.append(Bintro(len(f.temps) - len(f.params)))
    return ClFunction(f.name, f.kind, list(f.params), dict(f.temps), head + body, f.ret_type,
                      f.abi_signature, f.selector)


def explicit_jumps(code: list) -> int:
    return sum(1 for s in code if type(s) is Bjump)


def clinear_program(p: CbProgram) -> ClProgram:
    return ClProgram(p.name, {n: linearize(f) for n, f in p.functions.items()}, p.nmethods,
                     dict(p.events))


# --------------------------------------------------------------- interpreter

@dataclass
class LinState:
    fn: ClFunction
    pc: int
    temps: dict
    stack: list


def label_index(code: list) -> dict:
    return {s.label: i for i, s in enumerate(code) if type(s) is Blabel}


def dispatch_gas(nmethods: int) -> int:
    return G.TABLE["dispatch_base"] + G.TABLE["dispatch_per_method"] * nmethods


def step(genv: Genv, st):
    p = genv.program
    if type(st) is Initialstate:
        fn = p.functions[st.fn]
        if fn.kind == A.FunctionKind.METHOD:
            genv.gas += dispatch_gas(p.nmethods)
        return Callstate(st.fn, None, [])
    if type(st) is Callstate:
        fn = p.functions[st.fn]
        temps = {} if st.args is None else dict(zip(fn.params, st.args))
        return LinState(fn, 0, temps, st.stack)
    if type(st) is Returnstate:
        if not st.stack:
            return Finalstate(True, st.value)
        fn, pc, temps, ret = st.stack[-1]
        genv.gas += G.TABLE["return_landing"]
        if ret is not None:
            genv.gas += G.SET
            temps[ret] = st.value
        return LinState(fn, pc, temps, st.stack[:-1])
    fn, temps = st.fn, st.temps
    if st.pc >= len(fn.code):
        raise InternalError(f"{fn.name}: control ran past the end of the code")
    s = fn.code[st.pc]
    t = type(s)
    if t is Blabel:
        genv.gas += G.NODE
        st.pc += 1
        return st
    if t is Bfetchargs:
        per = G.TABLE["fetcharg_method"] if fn.kind == A.FunctionKind.METHOD else G.TABLE["fetcharg_constructor"]
        genv.gas += per * s.n
        for i, v in enumerate(genv.args[:s.n]):
            temps[fn.params[i]] = v
        st.pc += 1
        return st
    if t is Bintro:
        genv.gas += G.TABLE["intro_per_slot"] * s.n
        for slot in range(len(fn.params), len(fn.params) + s.n):
            temps[slot] = VZERO
        st.pc += 1
        return st
    if t is Bjump:
        genv.gas += JUMP
        st.pc = _find(fn, s.target)
        return st
    if t is Bjumpi:
        genv.gas += G.clike_expr(s.cond) + JUMPI
        st.pc = _find(fn, s.target) if as_word(eval_clike(s.cond, temps, genv)) else st.pc + 1
        return st
    if t is Bcall:
        args = [eval_clike(a, temps, genv) for a in s.args]
        genv.gas += sum(G.clike_expr(a) for a in s.args) + PUSHLABEL + JUMP
        return Callstate(s.fn, args, st.stack + [(fn, st.pc + 1, temps, s.ret)])
    if t is Bdone:
        has_value = s.e is not None
        genv.gas += (G.clike_expr(s.e) if has_value else 0) + done_cost(genv, fn, fn.nslots, has_value)
        return Returnstate(eval_clike(s.e, temps, genv) if has_value else VUNIT, st.stack)
    if t is Brevert:
        genv.gas += G.REVERT
        return Finalstate(False, reason="revert")
    if not exec_simple(genv, s, temps):
        return Finalstate(False, reason="transfer failed")
    st.pc += 1
    return st


def _find(fn: ClFunction, label) -> int:
    for i, s in enumerate(fn.code):
        if type(s) is Blabel and s.label == label:
            return i
    raise InternalError(f"unresolved label {label}")
