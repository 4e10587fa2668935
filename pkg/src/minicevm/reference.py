"""Reference big-step interpreter for typed MiniC.

Statements run in a state-then-option style: ``exec_stmt`` returns the new
state, or None when the statement reverts. A revert discards every effect,
so callers keep their pre-state. Besides the outcome, every run accumulates
a source-level gas bound from the gas table.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import gastable as G
from .core import ast as A
from .core.machine import MachineEnv
from .core.memory import Memory, StorageLayout, mem_read, mem_write
from .core.values import (MASK, VUNIT, Field, Global, Index, Eid, Vhash, Vhash2, Vint,
                          as_word, vbool, vint)
from .errors import (ArityMismatch, InternalError, UnboundVariable, UnknownIdent,
                     UnsupportedFeature)
from .evm import fees as F

DEFAULT_FUEL = 1_000_000


@dataclass
class Completed:
    value: object                  # Value returned by the method (Vunit for unit methods)
    storage: dict                  # HashKey -> Value
    events: list                   # [(topics, data)] as int tuples
    gas_bound: int
    balances: dict = field(default_factory=dict)

    @property
    def success(self):
        return True


@dataclass
class Reverted:
    gas_bound: int
    reason: str = "revert"

    @property
    def success(self):
        return False


@dataclass
class ExecState:
    """Mutable working state for one function activation."""
    program: A.Program
    fn: A.Function
    temps: dict
    mem: Memory
    env: MachineEnv
    events: list
    gas: int = 0
    flow: str = "normal"           # "normal", "break" or "return"
    ret: object = VUNIT
    runtime_len: int = 0
    fuel: int = DEFAULT_FUEL


# ---------------------------------------------------------------- expressions

def _path(st, e):
    """Extended identifier named by a storage-path expression."""
    t = type(e)
    if t is A.Eglob:
        return Global(e.name)
    if t is A.Eindex:
        return Index(_path(st, e.e), as_word(eval_expr(st, e.idx)))
    if t is A.Efield:
        return Field(_path(st, e.e), e.name)
    raise InternalError(f"not a storage path: {e!r}")


def _binop(op, a, b):
    if op == "sha2":
        return Vhash2(a, b)
    x, y = as_word(a), as_word(b)
    if op == "add":
        return vint(x + y)
    if op == "sub":
        return vint(x - y)
    if op == "mul":
        return vint(x * y)
    if op == "div":
        return Vint(x // y if y else 0)
    if op == "mod":
        return Vint(x % y if y else 0)
    if op == "eq":
        return vbool(a == b)
    if op == "ne":
        return vbool(a != b)
    if op == "lt":
        return vbool(x < y)
    if op == "gt":
        return vbool(x > y)
    if op == "le":
        return vbool(x <= y)
    if op == "ge":
        return vbool(x >= y)
    if op == "and":
        return Vint(x & y)
    if op == "or":
        return Vint(x | y)
    if op == "xor":
        return Vint(x ^ y)
    raise InternalError(f"unknown binop {op}")


def eval_expr(st: ExecState, e):
    """Pure evaluation; storage paths are dereferenced implicitly."""
    t = type(e)
    if t is A.Etemp:
        try:
            return st.temps[e.id]
        except KeyError:
            raise UnboundVariable(f"temp {st.fn.temp_name(e.id)} read before assignment") from None
    if t is A.Eint256 or t is A.Eint:
        return Vint(e.value & MASK)
    if t is A.Eglob or t is A.Eindex or t is A.Efield:
        return mem_read(st.mem, Eid(_path(st, e)), e.ty)
    if t is A.Ebinop:
        return _binop(e.op, eval_expr(st, e.e1), eval_expr(st, e.e2))
    if t is A.Eunop:
        v = eval_expr(st, e.e)
        if e.op == "not":
            return vbool(as_word(v) == 0)
        if e.op == "bitnot":
            return Vint(MASK ^ as_word(v))
        if e.op == "sha1":
            return Vhash(v)
        raise InternalError(f"unknown unop {e.op}")
    if t is A.Ecall0:
        env = st.env
        return Vint({"caller": env.caller, "callvalue": env.callvalue,
                     "address": env.self_address, "number": env.block_number}[e.builtin] & MASK)
    if t is A.Ecall1:
        return Vint(st.env.balance_of(as_word(eval_expr(st, e.e))))
    if t is A.Evar:
        raise UnboundVariable(f"local variable {e.name} has no storage in this interpreter")
    raise UnsupportedFeature(f"expression {type(e).__name__} is not supported")


# ----------------------------------------------------------------- statements

def _done_cost(st: ExecState, has_value: bool) -> int:
    kind = st.fn.kind
    if kind == A.FunctionKind.PRIVATE:
        return G.done_internal(len(st.fn.temps), has_value)
    if kind == A.FunctionKind.METHOD:
        return G.done_method(has_value)
    return G.done_constructor(st.runtime_len)


def exec_stmt(st: ExecState, s) -> Optional[ExecState]:
    """Execute ``s``; None means the transaction reverts."""
    t = type(s)
    if t is A.Ssequence:
        st2 = exec_stmt(st, s.s1)
        if st2 is None or st2.flow != "normal":
            return st2
        return exec_stmt(st2, s.s2)
    if t is A.Sskip:
        return st
    if t is A.Sset:
        st.gas += G.NODE + G.EDGE + G.minic_expr(s.e) + G.SET
        st.temps[s.temp] = eval_expr(st, s.e)
        return st
    if t is A.Sassign:
        v = eval_expr(st, s.rhs)
        lv = Eid(_path(st, s.lhs))
        old = mem_read(st.mem, lv, s.lhs.ty)
        st.gas += (G.NODE + G.EDGE + G.minic_addr(s.lhs) + G.minic_expr(s.rhs)
                   + G.sstore(as_word(old), as_word(v)))
        st.mem = mem_write(st.mem, lv, v)
        return st
    if t is A.Sifthenelse:
        st.gas += G.NODE + G.COND + G.minic_expr(s.cond)
        c = eval_expr(st, s.cond)
        return exec_stmt(st, s.s1 if as_word(c) != 0 else s.s2)
    if t is A.Sloop:
        while True:
            st.fuel -= 1
            if st.fuel < 0:
                raise InternalError("reference interpreter ran out of fuel")
            st.gas += G.NODE + G.EDGE
            st = exec_stmt(st, s.body)
            if st is None:
                return None
            if st.flow == "break":
                st.flow = "normal"
                return st
            if st.flow == "return":
                return st
    if t is A.Sbreak:
        st.flow = "break"
        return st
    if t is A.Sreturn:
        has_value = s.e is not None
        st.gas += G.NODE + (G.minic_expr(s.e) if has_value else 0) + _done_cost(st, has_value)
        st.ret = eval_expr(st, s.e) if has_value else VUNIT
        st.flow = "return"
        return st
    if t is A.Scall:
        return _call(st, s)
    if t is A.Srevert:
        st.gas += G.NODE + G.REVERT
        return None
    if t is A.Stransfer:
        to = as_word(eval_expr(st, s.to))
        amount = as_word(eval_expr(st, s.amount))
        ok = st.env.transfer(to, amount)
        st.gas += G.NODE + G.minic_expr(s.to) + G.minic_expr(s.amount) + G.transfer(amount, ok)
        if not ok:
            return None
        st.gas += G.EDGE
        return st
    if t is A.Slog:
        topics = tuple(as_word(eval_expr(st, e)) for e in s.topics)
        data = tuple(as_word(eval_expr(st, e)) for e in s.data)
        st.gas += (G.NODE + G.EDGE + sum(G.minic_expr(e) for e in s.topics + s.data)
                   + G.log(len(topics), len(data)))
        st.events.append((topics, data))
        return st
    if t is A.Scallmethod:
        raise UnsupportedFeature("callmethod is not supported by this backend")
    raise InternalError(f"unknown statement {s!r}")


def _call(st: ExecState, s: A.Scall) -> Optional[ExecState]:
    callee = st.program.functions.get(s.fn)
    if callee is None:
        raise UnknownIdent(f"unknown function {s.fn}")
    if len(s.args) != len(callee.params):
        raise ArityMismatch(f"{s.fn} expects {len(callee.params)} arguments, got {len(s.args)}")
    args = [eval_expr(st, a) for a in s.args]
    st.gas += (G.NODE + G.EDGE + sum(G.minic_expr(a) for a in s.args)
               + G.call_entry(len(callee.temps), len(args)) + G.call_return(s.ret is not None))
    sub = ExecState(st.program, callee, dict(zip(callee.params, args)), st.mem, st.env,
                    st.events, st.gas, runtime_len=st.runtime_len, fuel=st.fuel)
    # exec_stmt mutates its state in place, so ``sub`` still holds the
    # accumulated gas when the callee reverts.
    if exec_stmt(sub, callee.body) is None:
        st.gas = sub.gas
        return None
    if sub.flow != "return":
        raise InternalError(f"{s.fn} finished without returning")
    st.mem, st.gas, st.fuel = sub.mem, sub.gas, sub.fuel
    if s.ret is not None:
        st.temps[s.ret] = sub.ret
    return st


# ------------------------------------------------------------------- methods

def method_calldata(fn: A.Function, args) -> bytes:
    body = b"".join(as_word(a).to_bytes(32, "big") for a in args)
    if fn.kind == A.FunctionKind.METHOD:
        return fn.selector.to_bytes(4, "big") + body
    return body


def run_method(program: A.Program, storage: dict, me: MachineEnv, method: str, args,
               runtime_len: int = 0, tx_overhead: Optional[int] = None,
               fuel: int = DEFAULT_FUEL):
    """Run one external call (or the constructor) against ``storage``.

    ``storage`` maps HashKey to Value and is not modified. For methods the
    transaction overhead is computed from the ABI calldata; for the
    constructor the caller supplies it, since it depends on the deployed code.
    """
    fn = program.functions.get(method)
    if fn is None or fn.kind == A.FunctionKind.PRIVATE:
        raise UnknownIdent(f"no external method {method}")
    args = [a if isinstance(a, Vint) else vint(a) for a in args]
    if len(args) != len(fn.params):
        raise ArityMismatch(f"{method} expects {len(fn.params)} arguments, got {len(args)}")
    slots = len(fn.temps)
    if fn.kind == A.FunctionKind.METHOD:
        gas = F.intrinsic_gas(method_calldata(fn, args)) if tx_overhead is None else tx_overhead
        gas += G.method_prologue(len(program.methods()), len(args), slots)
    else:
        gas = (tx_overhead or 0) + G.constructor_prologue(len(args), slots)
    env = me.copy()
    mem = Memory(StorageLayout.of_program(program), {}, dict(storage))
    st = ExecState(program, fn, dict(zip(fn.params, args)), mem, env, [], gas,
                   runtime_len=runtime_len, fuel=fuel)
    out = exec_stmt(st, fn.body)
    if out is None:
        return Reverted(st.gas)
    if out.flow != "return":
        raise InternalError(f"{method} finished without returning")
    gas = out.gas
    if fn.kind == A.FunctionKind.CONSTRUCTOR:
        gas += F.G_CODEDEPOSIT * runtime_len
    return Completed(out.ret, dict(out.mem.storage), list(out.events), gas, dict(env.balances))

