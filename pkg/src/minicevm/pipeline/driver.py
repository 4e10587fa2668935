"""Whole-pipeline compilation and uniform access to every phase's interpreter."""
from __future__ import annotations

from dataclasses import dataclass

from .. import reference
from ..core import ast as A
from ..core.machine import MachineEnv
from ..core.values import Vint, vint
from ..errors import ArityMismatch, UnknownIdent
from ..evm import fees as F
from ..evm.backend import Assembled, abi_args, assemble, wrap_deployment
from ..evm.interp import Account, Receipt, Tx, run_transaction
from ..frontend.parser import parse
from ..frontend.syntax import SourceUnit
from ..frontend.typecheck import typecheck
from . import cbasic, cgraph, clike, clinear, expressionless, methodical, stacked
from .runtime import DEFAULT_FUEL, Genv, Initialstate, IrOutcome, run_machine

PHASES = ("minic", "clike", "cgraph", "cbasic", "clinear", "stacked", "expressionless",
          "peephole", "methodical", "evm")
IR_PHASES = PHASES[:-1]


@dataclass
class Artifact:
    name: str
    minic: A.Program
    clike: A.Program
    cgraph: cgraph.CgProgram
    allocated: cgraph.CgProgram
    cbasic: cbasic.CbProgram
    clinear: clinear.ClProgram
    stacked: stacked.StProgram
    expressionless: expressionless.XProgram
    optimized: expressionless.XProgram
    methodical: methodical.MethodicalProgram
    runtime: Assembled
    constructor: Assembled
    opt_report: object = None

    @property
    def runtime_code(self) -> bytes:
        return self.runtime.code

    @property
    def init_code(self) -> bytes:
        return self.constructor.code + self.runtime.code

    def deploy_data(self, args=()) -> bytes:
        return wrap_deployment(self.constructor.code, self.runtime.code, args)

    def function(self, name: str) -> A.Function:
        fn = self.minic.functions.get(name)
        if fn is None or fn.kind == A.FunctionKind.PRIVATE:
            raise UnknownIdent(f"no external method {name}")
        return fn

    def calldata(self, method: str, args=()) -> bytes:
        fn = self.function(method)
        if len(args) != len(fn.params):
            raise ArityMismatch(f"{method} expects {len(fn.params)} arguments, got {len(args)}")
        return reference.method_calldata(fn, [_v(a) for a in args])

    def abi(self) -> list:
        out = []
        for f in self.minic.functions.values():
            if f.kind == A.FunctionKind.METHOD:
                out.append({"name": f.name, "signature": f.abi_signature,
                            "selector": f"0x{f.selector:08x}", "returns": f.returns_value()})
        return out


def _v(a):
    return a if isinstance(a, Vint) else vint(a)


def frontend(src) -> A.Program:
    if isinstance(src, A.Program):
        return src
    if isinstance(src, str):
        src = parse(src)
    if isinstance(src, SourceUnit):
        return typecheck(src)
    raise TypeError(f"cannot compile {type(src).__name__}")


def compile_program(src, optimize: bool = True, rules=None) -> Artifact:
    """Run every phase. ``rules`` defaults to the bundled peephole rules."""
    from ..peephole import load_rules, optimize_program
    p = frontend(src)
    cl = clike.to_clike(p)
    cg = cgraph.cgraph_program(cl)
    alloc = cgraph.allocate_program(cg)
    cb = cbasic.cbasic_program(alloc)
    lin = clinear.clinear_program(cb)
    st = stacked.stacked_program(lin)
    xp = expressionless.expressionless_program(st)
    report = None
    opt = xp
    if optimize:
        opt, report = optimize_program(xp, load_rules() if rules is None else rules)
    m = methodical.methodize(opt)
    rt = assemble(m.runtime, revert_label=methodical.revert_label(methodical.RUNTIME))
    ct = assemble(m.constructor, runtime_len=len(rt.code),
                  revert_label=methodical.revert_label(methodical.CONSTRUCTOR))
    return Artifact(p.name, p, cl, cg, alloc, cb, lin, st, xp, opt, m, rt, ct, report)


# -------------------------------------------------------------- IR execution

def tx_overhead(art: Artifact, method: str, args) -> int:
    fn = art.function(method)
    if fn.kind == A.FunctionKind.CONSTRUCTOR:
        return F.intrinsic_gas(art.deploy_data(args), create=True)
    return F.intrinsic_gas(art.calldata(method, args))


def _stepper(art: Artifact, phase: str, ctor: bool):
    if phase == "clike":
        return clike.step, art.clike
    if phase == "cgraph":
        return cgraph.step, art.cgraph
    if phase == "cbasic":
        return cbasic.step, art.cbasic
    if phase == "clinear":
        return clinear.step, art.clinear
    if phase == "stacked":
        return stacked.step, art.stacked
    if phase == "expressionless":
        return expressionless.expressionless_machine(art.expressionless).step, art.expressionless
    if phase == "peephole":
        return expressionless.expressionless_machine(art.optimized).step, art.optimized
    if phase == "methodical":
        mk = methodical.constructor_machine if ctor else methodical.runtime_machine
        return mk(art.methodical).step, art.methodical
    raise UnknownIdent(f"unknown phase {phase}")


def run_phase(art: Artifact, phase: str, storage: dict, env: MachineEnv, method: str, args=(),
              fuel: int = DEFAULT_FUEL, trace: list | None = None) -> IrOutcome:
    """Run one external call at ``phase``; ``storage`` (HashKey -> Value) is not modified.

    Gas includes the transaction's intrinsic cost, and for the constructor
    the code deposit, so totals are comparable with EVM ``gas_used``.
    """
    fn = art.function(method)
    args = [_v(a) for a in args]
    if len(args) != len(fn.params):
        raise ArityMismatch(f"{method} expects {len(fn.params)} arguments, got {len(args)}")
    ctor = fn.kind == A.FunctionKind.CONSTRUCTOR
    overhead = tx_overhead(art, method, args)
    rt_len = len(art.runtime_code)
    if phase == "minic":
        r = reference.run_method(art.minic, storage, env, method, args, runtime_len=rt_len,
                                 tx_overhead=overhead, fuel=fuel)
        if r.success:
            return IrOutcome(True, r.value, r.storage, r.events, r.gas_bound, r.balances)
        return IrOutcome(False, None, dict(storage), [], r.gas_bound, dict(env.balances),
                         r.reason or "revert")
    step, prog = _stepper(art, phase, ctor)
    genv = Genv(prog, env.copy(), dict(storage), args, gas=overhead, runtime_len=rt_len, fuel=fuel,
                calldata=b"" if ctor else art.calldata(method, args))
    out = run_machine(step, genv, Initialstate(method), trace)
    if out.success and ctor:
        out.gas += F.G_CODEDEPOSIT * rt_len
    return out


# ----------------------------------------------------------------- EVM side

class Chain:
    """A tiny world state for running compiled contracts."""

    def __init__(self, balances: dict | None = None, block_number: int = 0):
        self.world = {a: Account(balance=b) for a, b in (balances or {}).items()}
        self.block_number = block_number

    def deploy(self, art: Artifact, args=(), sender: int = 0xA11CE, value: int = 0,
               gas_limit: int = 6_000_000, trace: bool = False) -> Receipt:
        tx = Tx(sender, None, art.deploy_data([_v(a) for a in args]), value, gas_limit,
                self.block_number)
        return run_transaction(self.world, tx, trace)

    def call(self, address: int, art: Artifact, method: str, args=(), sender: int = 0xA11CE,
             value: int = 0, gas_limit: int = 3_000_000, block_number: int | None = None,
             trace: bool = False) -> Receipt:
        bn = self.block_number if block_number is None else block_number
        tx = Tx(sender, address, art.calldata(method, args), value, gas_limit, bn)
        return run_transaction(self.world, tx, trace)

    def storage(self, address: int) -> dict:
        return {k: v for k, v in self.world[address].storage.items() if v}

    def balance(self, address: int) -> int:
        acct = self.world.get(address)
        return acct.balance if acct else 0


def decode_word(data: bytes) -> int | None:
    return int.from_bytes(data[:32], "big") if len(data) >= 32 else None


__all__ = ["Artifact", "Chain", "compile_program", "run_phase", "frontend", "PHASES", "IR_PHASES",
           "tx_overhead", "decode_word", "abi_args"]
