"""Shared run-time pieces for the IR interpreters.

Every interpreter works on a ``Genv`` (machine environment, symbolic storage,
event list, gas counter) and moves through the same state kinds: an
Initialstate for the external entry, Callstate/Returnstate around internal
calls, IR-specific regular states, and a Finalstate.
"""
from __future__ import annotations

import copy
import dataclasses

from dataclasses import dataclass, field
from ..core import ast as A
from ..core.machine import MachineEnv
from ..core.values import MASK, VUNIT, Vhash, Vhash2, Vint, as_word, value_to_hashkey, vbool, vint
from ..errors import InternalError, StuckState, UnboundVariable

DEFAULT_FUEL = 2_000_000


@dataclass
class Genv:
    program: object                 # IR-specific program container
    env: MachineEnv
    storage: dict                   # HashKey -> Value, mutated in place
    args: list                      # external call arguments (Values)
    events: list = field(default_factory=list)
    gas: int = 0
    runtime_len: int = 0
    fuel: int = DEFAULT_FUEL
    calldata: bytes = b""


@dataclass
class Initialstate:
    fn: str


@dataclass
class Callstate:
    fn: str
    args: list
    stack: list                     # caller continuations


@dataclass
class Returnstate:
    value: object
    stack: list


@dataclass
class Finalstate:
    success: bool
    value: object = VUNIT
    reason: str = ""


@dataclass
class IrOutcome:
    success: bool
    value: object
    storage: dict
    events: list
    gas: int
    balances: dict
    reason: str = ""


def snapshot(st):
    """Copy of a machine state, detached from the lists and dicts it mutates."""
    if not dataclasses.is_dataclass(st):
        return st
    c = copy.copy(st)
    for f in dataclasses.fields(c):
        v = getattr(c, f.name)
        if isinstance(v, (list, dict)):
            object.__setattr__(c, f.name, copy.copy(v))
    return c


def run_machine(step, genv: Genv, st, trace=None) -> IrOutcome:
    """Drive ``step`` to a Finalstate; the storage is only kept on success."""
    pre = dict(genv.storage)
    pre_bal = dict(genv.env.balances)
    while type(st) is not Finalstate:
        genv.fuel -= 1
        if genv.fuel < 0:
            raise StuckState("interpreter fuel exhausted")
        if trace is not None:
            trace.append((snapshot(st), genv.gas))
        st = step(genv, st)
    if not st.success:
        genv.storage.clear()
        genv.storage.update(pre)
        genv.env.balances = pre_bal
        return IrOutcome(False, None, pre, [], genv.gas, pre_bal, st.reason)
    return IrOutcome(True, st.value, genv.storage, genv.events, genv.gas,
                     dict(genv.env.balances))


# --------------------------------------------------------------- expressions

def binop(op, a, b):
    if op == "sha2":
        return Vhash2(a, b)
    if op == "eq":
        return vbool(a == b)
    if op == "ne":
        return vbool(a != b)
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


def unop(op, v):
    if op == "not":
        return vbool(as_word(v) == 0)
    if op == "bitnot":
        return Vint(MASK ^ as_word(v))
    if op == "sha1":
        return Vhash(v)
    raise InternalError(f"unknown unop {op}")


def builtin0(env: MachineEnv, name: str):
    return Vint({"caller": env.caller, "callvalue": env.callvalue,
                 "address": env.self_address, "number": env.block_number}[name] & MASK)


def sload(storage: dict, addr):
    key = value_to_hashkey(addr)
    if key is None:
        raise StuckState(f"storage access at non-address value {addr!r}")
    return storage.get(key, Vint(0))


def sstore(storage: dict, addr, v):
    key = value_to_hashkey(addr)
    if key is None:
        raise StuckState(f"storage access at non-address value {addr!r}")
    storage[key] = v


def eval_clike(e, temps: dict, genv: Genv):
    """Clike expression semantics: storage only through explicit Ederef."""
    t = type(e)
    if t is A.Etemp:
        try:
            return temps[e.id]
        except KeyError:
            raise UnboundVariable(f"temp {e.id} unbound") from None
    if t is A.Eint256 or t is A.Eint:
        return Vint(e.value & MASK)
    if t is A.Ederef:
        return sload(genv.storage, eval_clike(e.e, temps, genv))
    if t is A.Ebinop:
        return binop(e.op, eval_clike(e.e1, temps, genv), eval_clike(e.e2, temps, genv))
    if t is A.Eunop:
        return unop(e.op, eval_clike(e.e, temps, genv))
    if t is A.Ecall0:
        return builtin0(genv.env, e.builtin)
    if t is A.Ecall1:
        return Vint(genv.env.balance_of(as_word(eval_clike(e.e, temps, genv))))
    raise StuckState(f"expression {e!r} has no Clike meaning")



def store_cost_args(storage: dict, addr, v):
    """(old word, new word) for SSTORE metering."""
    key = value_to_hashkey(addr)
    old = storage.get(key, Vint(0)) if key is not None else Vint(0)
    return as_word(old), as_word(v)
