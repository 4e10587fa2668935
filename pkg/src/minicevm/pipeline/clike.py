"""MiniC to Clike: storage paths become explicit hash computations.

A read of ``balances[k]`` turns into ``*(sha2(0, k))``; ``Eglob`` becomes its
slot number. The symbolic ``sha2`` value is exactly the hash key
``pair(singleton(0), k)`` seen through ``hashkey_to_value``.
"""
from __future__ import annotations

from dataclasses import dataclass

from .. import gastable as G
from ..core import ast as A
from ..core.memory import StorageLayout
from ..core.types import TINT, Tstruct, resolve
from ..core.values import VUNIT, as_word
from ..errors import InternalError, UnknownGlobal, UnsupportedFeature
from .runtime import (Callstate, Finalstate, Genv, Initialstate, Returnstate, eval_clike,
                      sstore, store_cost_args)


def to_clike(p: A.Program, layout: StorageLayout | None = None) -> A.Program:
    layout = layout or StorageLayout.of_program(p)
    tr = _Translator(layout)
    funcs = {}
    for name, f in p.functions.items():
        funcs[name] = A.Function(f.name, f.kind, list(f.params), dict(f.temps), tr.stmt(f.body),
                                 f.ret_type, f.abi_signature, f.selector)
    return A.Program(p.name, list(p.globals), dict(p.composites), funcs, p.constructor,
                     dict(p.events))


class _Translator:
    def __init__(self, layout: StorageLayout):
        self.layout = layout

    def addr(self, e):
        t = type(e)
        if t is A.Eglob:
            try:
                return A.Eint256(self.layout.slot(e.name))
            except Exception:
                raise UnknownGlobal(f"unknown global {e.name}") from None
        if t is A.Eindex:
            return A.Ebinop("sha2", self.addr(e.e), self.expr(e.idx), TINT)
        if t is A.Efield:
            base = resolve(e.e.ty, self.layout.composites)
            if type(base) is not Tstruct:
                raise InternalError(f"field {e.name} of non-struct {base}")
            return A.Ebinop("sha2", self.addr(e.e), A.Eint256(base.field_index(e.name)), TINT)
        raise InternalError(f"not a storage path: {e!r}")

    def expr(self, e):
        t = type(e)
        if t in (A.Eglob, A.Eindex, A.Efield):
            return A.Ederef(self.addr(e), e.ty)
        if t is A.Ebinop:
            return A.Ebinop(e.op, self.expr(e.e1), self.expr(e.e2), e.ty)
        if t is A.Eunop:
            return A.Eunop(e.op, self.expr(e.e), e.ty)
        if t is A.Ecall1:
            return A.Ecall1(e.builtin, self.expr(e.e), e.ty)
        if t in (A.Evar, A.Ederef, A.Eaddr):
            raise UnsupportedFeature(f"{t.__name__} is outside the storage-only memory model")
        return e

    def stmt(self, s):
        t = type(s)
        if t is A.Sassign:
            return A.Sassign(A.Ederef(self.addr(s.lhs), s.lhs.ty), self.expr(s.rhs))
        if t is A.Sset:
            return A.Sset(s.temp, self.expr(s.e))
        if t is A.Scall:
            return A.Scall(s.ret, s.fn, tuple(self.expr(a) for a in s.args))
        if t is A.Ssequence:
            return A.Ssequence(self.stmt(s.s1), self.stmt(s.s2))
        if t is A.Sifthenelse:
            return A.Sifthenelse(self.expr(s.cond), self.stmt(s.s1), self.stmt(s.s2))
        if t is A.Sloop:
            return A.Sloop(self.stmt(s.body))
        if t is A.Sreturn:
            return A.Sreturn(None if s.e is None else self.expr(s.e))
        if t is A.Stransfer:
            return A.Stransfer(self.expr(s.to), self.expr(s.amount))
        if t is A.Slog:
            return A.Slog(tuple(self.expr(x) for x in s.topics), tuple(self.expr(x) for x in s.data))
        if t is A.Scallmethod:
            raise UnsupportedFeature("callmethod is not supported by this backend")
        return s


# ---------------------------------------------------------------- interpreter

@dataclass
class ClikeState:
    fn: A.Function
    stmt: object
    cont: list          # ("seq", stmt) | ("loop", Sloop)
    temps: dict
    stack: list         # caller frames: (fn, cont, temps, ret temp)


def done_cost(genv: Genv, fn: A.Function, slots: int, has_value: bool) -> int:
    if fn.kind == A.FunctionKind.PRIVATE:
        return G.done_internal(slots, has_value)
    if fn.kind == A.FunctionKind.METHOD:
        return G.done_method(has_value)
    return G.done_constructor(genv.runtime_len)


def initial_gas(p: A.Program, fn: A.Function, nargs: int, slots: int) -> int:
    if fn.kind == A.FunctionKind.METHOD:
        return G.method_prologue(len(p.methods()), nargs, slots)
    return G.constructor_prologue(nargs, slots)


def step(genv: Genv, st):
    p = genv.program
    if type(st) is Initialstate:
        fn = p.functions[st.fn]
        genv.gas += initial_gas(p, fn, len(genv.args), len(fn.temps))
        return Callstate(st.fn, list(genv.args), [])
    if type(st) is Callstate:
        fn = p.functions[st.fn]
        return ClikeState(fn, fn.body, [], dict(zip(fn.params, st.args)), st.stack)
    if type(st) is Returnstate:
        if not st.stack:
            return Finalstate(True, st.value)
        fn, cont, temps, ret = st.stack[-1]
        if ret is not None:
            temps[ret] = st.value
        return ClikeState(fn, A.SKIP, cont, temps, st.stack[:-1])
    s = st.stmt
    t = type(s)
    fn, temps = st.fn, st.temps
    if t is A.Sskip:
        if not st.cont:
            raise InternalError(f"{fn.name} fell off its end")
        kind, k = st.cont[-1]
        st.cont = st.cont[:-1]
        if kind == "loop":
            st.cont = st.cont + [("loop", k)]
            st.stmt = k.body
            genv.gas += G.NODE + G.EDGE
        else:
            st.stmt = k
        return st
    if t is A.Ssequence:
        st.cont = st.cont + [("seq", s.s2)]
        st.stmt = s.s1
        return st
    if t is A.Sloop:
        genv.gas += G.NODE + G.EDGE
        st.cont = st.cont + [("loop", s)]
        st.stmt = s.body
        return st
    if t is A.Sbreak:
        cont = list(st.cont)
        while cont and cont[-1][0] != "loop":
            cont.pop()
        if not cont:
            raise InternalError("break outside a loop")
        cont.pop()
        st.cont, st.stmt = cont, A.SKIP
        return st
    if t is A.Sset:
        genv.gas += G.NODE + G.EDGE + G.clike_expr(s.e) + G.SET
        temps[s.temp] = eval_clike(s.e, temps, genv)
        st.stmt = A.SKIP
        return st
    if t is A.Sassign:
        addr = eval_clike(s.lhs.e, temps, genv)
        v = eval_clike(s.rhs, temps, genv)
        old, new = store_cost_args(genv.storage, addr, v)
        genv.gas += (G.NODE + G.EDGE + G.clike_expr(s.lhs.e) + G.clike_expr(s.rhs)
                     + G.sstore(old, new))
        sstore(genv.storage, addr, v)
        st.stmt = A.SKIP
        return st
    if t is A.Sifthenelse:
        genv.gas += G.NODE + G.COND + G.clike_expr(s.cond)
        c = eval_clike(s.cond, temps, genv)
        st.stmt = s.s1 if as_word(c) else s.s2
        return st
    if t is A.Scall:
        callee = p.functions[s.fn]
        args = [eval_clike(a, temps, genv) for a in s.args]
        genv.gas += (G.NODE + G.EDGE + sum(G.clike_expr(a) for a in s.args)
                     + G.call_entry(len(callee.temps), len(args)) + G.call_return(s.ret is not None))
        return Callstate(s.fn, args, st.stack + [(fn, st.cont, temps, s.ret)])
    if t is A.Sreturn:
        has_value = s.e is not None
        genv.gas += (G.NODE + (G.clike_expr(s.e) if has_value else 0)
                     + done_cost(genv, fn, len(fn.temps), has_value))
        v = eval_clike(s.e, temps, genv) if has_value else VUNIT
        return Returnstate(v, st.stack)
    if t is A.Srevert:
        genv.gas += G.NODE + G.REVERT
        return Finalstate(False, reason="revert")
    if t is A.Stransfer:
        to = as_word(eval_clike(s.to, temps, genv))
        amount = as_word(eval_clike(s.amount, temps, genv))
        ok = genv.env.transfer(to, amount)
        genv.gas += G.NODE + G.clike_expr(s.to) + G.clike_expr(s.amount) + G.transfer(amount, ok)
        if not ok:
            return Finalstate(False, reason="transfer failed")
        genv.gas += G.EDGE
        st.stmt = A.SKIP
        return st
    if t is A.Slog:
        topics = tuple(as_word(eval_clike(e, temps, genv)) for e in s.topics)
        data = tuple(as_word(eval_clike(e, temps, genv)) for e in s.data)
        genv.gas += (G.NODE + G.EDGE + sum(G.clike_expr(e) for e in s.topics + s.data)
                     + G.log(len(topics), len(data)))
        genv.events.append((topics, data))
        st.stmt = A.SKIP
        return st
    raise InternalError(f"Clike cannot step {s!r}")
