"""Step the Methodical machine and the EVM side by side.

After every Methodical statement the EVM is run up to the first instruction
of the next statement. At each such point the two stacks, the storage, the
memory size and the gas must agree; for gas the check is that gas used by
the machine plus gas remaining in the EVM equals the transaction's limit.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..core import ast as A
from ..errors import InternalError
from ..evm.interp import (ConstantCtx, ContractReturn, EvmProgram, InstructionContinue,
                          VariableCtx, instruction_sem)
from ..pipeline import methodical as M
from ..pipeline.driver import Artifact, tx_overhead
from ..pipeline.expressionless import XState, Xsstore
from ..pipeline.runtime import Finalstate, Genv
from .relations import gas_invariant, rel_mem, rel_stk, rel_store, return_word, storage_to_words


@dataclass
class LockstepReport:
    method: str
    steps: int = 0
    gas_checks: int = 0
    failures: list = field(default_factory=list)    # (step, statement index, message)
    ir_success: bool | None = None
    evm_success: bool | None = None
    gas_used: int = 0

    @property
    def ok(self) -> bool:
        return not self.failures and self.ir_success == self.evm_success


def _evm_until(c: ConstantCtx, v: VariableCtx, target: int | None, fuel: int = 100_000):
    """Run at least one instruction, then stop at ``target`` or on termination."""
    content = c.program.content
    for _ in range(fuel):
        i = content.get(v.pc)
        if i is None:
            return None
        r = instruction_sem(c, v, i)
        if type(r) is not InstructionContinue:
            return r
        if v.pc == target:
            return v
    raise InternalError("EVM did not reach the next statement")


def lockstep(art: Artifact, method: str, args, storage: dict, env, gas_limit: int = 3_000_000,
             check_store: str = "sstore") -> LockstepReport:
    """``check_store`` is "sstore" (after every SSTORE), "every" or "end"."""
    fn = art.function(method)
    ctor = fn.kind == A.FunctionKind.CONSTRUCTOR
    m = art.methodical
    if ctor:
        stmts, asm = m.constructor, art.constructor
        code, calldata = art.deploy_data(args), b""
        machine = M.constructor_machine(m)
    else:
        stmts, asm = m.runtime, art.runtime
        code, calldata = art.runtime_code, art.calldata(method, args)
        machine = M.runtime_machine(m)
    overhead = tx_overhead(art, method, args)
    rep = LockstepReport(method)

    c = ConstantCtx(EvmProgram.from_bytes(code), env.self_address, calldata, env.caller,
                    env.callvalue, env.block_number)
    v = VariableCtx(storage=storage_to_words(storage), gas=gas_limit - overhead,
                    balances=dict(env.balances))
    genv = Genv(m, env.copy(), dict(storage), list(args), gas=overhead,
                runtime_len=len(art.runtime_code), calldata=calldata)
    st = machine.start(genv, method)
    offsets, labels = asm.offsets, asm.labels

    def fail(msg):
        rep.failures.append((rep.steps, st.pc if type(st) is XState else None, msg))

    last = None
    while True:
        # boundary checks
        if v.pc != offsets[st.pc]:
            fail(f"EVM at pc {v.pc:#x}, statement starts at {offsets[st.pc]:#x}")
            break
        if not rel_stk(st.stack, v.stack, labels):
            fail("stacks differ")
        if not gas_invariant(genv.gas, v.gas, gas_limit):
            fail(f"gas used {genv.gas} + remaining {v.gas} != {gas_limit}")
        rep.gas_checks += 1
        if not rel_mem(st.mem_words, v.mem_words):
            fail(f"memory words {st.mem_words} != {v.mem_words}")
        if check_store == "every" or (check_store == "sstore" and type(last) is Xsstore):
            if not rel_store(genv.storage, v.storage):
                fail("storage differs")
        if rep.failures:
            break
        last = stmts[st.pc]
        nst = machine.step(genv, st)
        rep.steps += 1
        if type(nst) is Finalstate:
            r = _evm_until(c, v, None)
            rep.ir_success = nst.success
            act = getattr(r, "action", None)
            rep.evm_success = type(act) is ContractReturn
            remaining = r.v.gas if r is not None else v.gas
            if rep.evm_success and not ctor and not return_word(nst.value, act.data):
                fail("return data differs")
            if nst.success == rep.evm_success and not gas_invariant(genv.gas, remaining, gas_limit):
                fail(f"final gas used {genv.gas} + remaining {remaining} != {gas_limit}")
            if nst.success and not rel_store(genv.storage, (r.v if r else v).storage):
                fail("final storage differs")
            rep.gas_used = genv.gas
            break
        st = nst
        r = _evm_until(c, v, offsets[st.pc])
        if r is not v:
            rep.ir_success = True
            rep.evm_success = False
            fail(f"EVM stopped early: {getattr(getattr(r, 'action', None), 'reason', r)}")
            break
    return rep
