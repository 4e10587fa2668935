"""Fuel-bounded EVM interpreter for the opcode subset the compiler emits.

The structure follows the usual formal presentation: ``instruction_sem``
gives one instruction's meaning, ``program_sem`` iterates it with a fuel
bound, and ``run_transaction`` wraps a single call or deployment.
Gas is charged by subtraction before the instruction takes effect.

For speed ``instruction_sem`` advances the VariableCtx in place; take a
``copy()`` first if the pre-state is still needed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..errors import UnknownAccount
from . import fees as F
from .keccak import keccak256, keccak256_bytes
from .opcodes import OPCODES, Inst, decode, is_push

MASK = (1 << 256) - 1
ADDRESS_MASK = (1 << 160) - 1
STACK_LIMIT = 1024
DEFAULT_FUEL = 10_000_000


@dataclass
class EvmProgram:
    content: dict          # byte position -> Inst
    length: int
    code: bytes = b""

    @classmethod
    def from_bytes(cls, code: bytes) -> "EvmProgram":
        return cls(dict(decode(code)), len(code), bytes(code))

    def instructions(self) -> list:
        return [self.content[p] for p in sorted(self.content)]


@dataclass
class ConstantCtx:
    program: EvmProgram
    address: int
    calldata: bytes = b""
    caller: int = 0
    callvalue: int = 0
    block_number: int = 0


@dataclass
class VariableCtx:
    stack: list = field(default_factory=list)       # top of stack is the last element
    memory: bytearray = field(default_factory=bytearray)
    mem_words: int = 0
    storage: dict = field(default_factory=dict)
    pc: int = 0
    gas: int = 0
    logs: list = field(default_factory=list)        # (topics, data)
    balances: dict = field(default_factory=dict)

    def copy(self) -> "VariableCtx":
        return VariableCtx(list(self.stack), bytearray(self.memory), self.mem_words,
                           dict(self.storage), self.pc, self.gas, list(self.logs),
                           dict(self.balances))


@dataclass(frozen=True)
class ContractReturn:
    data: bytes


@dataclass(frozen=True)
class ContractRevert:
    data: bytes


@dataclass(frozen=True)
class ContractFail:
    reason: str


@dataclass
class InstructionContinue:
    v: VariableCtx


@dataclass
class InstructionToEnvironment:
    action: object
    v: VariableCtx
    mem_range: Optional[tuple] = None


# --------------------------------------------------------------- gas metering

def _mem_extra(v: VariableCtx, off: int, size: int) -> int:
    return F.expansion(v.mem_words, off, size)[0]


def meter_gas(i: Inst, v: VariableCtx) -> int:
    """Fee for executing ``i`` in ``v``. Assumes enough stack operands."""
    op = i.op
    info = OPCODES.get(op)
    if info is None:
        return 0
    base = info[3]
    s = v.stack
    if op == 0x55:  # SSTORE
        return F.sstore_cost(v.storage.get(s[-1], 0), s[-2])
    if op == 0x52 or op == 0x51:  # MSTORE / MLOAD
        return base + _mem_extra(v, s[-1], 32)
    if op == 0x20:  # SHA3
        off, size = s[-1], s[-2]
        return base + F.G_SHA3WORD * F.words_for(size) + _mem_extra(v, off, size)
    if op == 0x39 or op == 0x37:  # CODECOPY / CALLDATACOPY
        off, size = s[-1], s[-3]
        return base + F.G_COPY * F.words_for(size) + _mem_extra(v, off, size)
    if op == 0xF3 or op == 0xFD:  # RETURN / REVERT
        return _mem_extra(v, s[-1], s[-2])
    if 0xA0 <= op <= 0xA4:
        return base + F.G_LOGDATA * s[-2] + _mem_extra(v, s[-1], s[-2])
    if op == 0xF1:
        g = base + (F.G_CALLVALUE if s[-3] else 0)
        w = v.mem_words
        for off, size in ((s[-4], s[-5]), (s[-6], s[-7])):
            if size:
                w = max(w, F.words_for(off + size))
        return g + F.mem_cost(w) - F.mem_cost(v.mem_words)
    return base


def _touch(v: VariableCtx, off: int, size: int):
    if size == 0:
        return
    _, w = F.expansion(v.mem_words, off, size)
    if w > v.mem_words:
        v.memory.extend(bytes(w * 32 - len(v.memory)))
        v.mem_words = w


def _mread(v: VariableCtx, off: int, size: int) -> bytes:
    _touch(v, off, size)
    return bytes(v.memory[off:off + size])


# ------------------------------------------------------------ instruction sem

def _fail(v, reason):
    return InstructionToEnvironment(ContractFail(reason), v)


def instruction_sem(c: ConstantCtx, v: VariableCtx, i: Inst):
    op = i.op
    info = OPCODES.get(op)
    if info is None:
        return _fail(v, f"invalid opcode 0x{op:02x}")
    s = v.stack
    pops, pushes = info[1], info[2]
    if len(s) < pops:
        return _fail(v, f"stack underflow at {info[0]}")
    if len(s) - pops + pushes > STACK_LIMIT:
        return _fail(v, "stack overflow")
    fee = meter_gas(i, v)
    if fee > v.gas:
        return _fail(v, "out of gas")
    v.gas -= fee
    nxt = v.pc + 1

    if is_push(op):
        s.append(i.imm)
        v.pc = nxt + (op - 0x5F)
        return InstructionContinue(v)
    if 0x80 <= op <= 0x8F:
        s.append(s[-(op - 0x7F)])
    elif 0x90 <= op <= 0x9F:
        n = op - 0x8F
        s[-1], s[-1 - n] = s[-1 - n], s[-1]
    elif op == 0x01:
        a = s.pop()
        s[-1] = (a + s[-1]) & MASK
    elif op == 0x03:
        a = s.pop()
        s[-1] = (a - s[-1]) & MASK
    elif op == 0x02:
        a = s.pop()
        s[-1] = (a * s[-1]) & MASK
    elif op == 0x04:
        a = s.pop()
        b = s[-1]
        s[-1] = a // b if b else 0
    elif op == 0x06:
        a = s.pop()
        b = s[-1]
        s[-1] = a % b if b else 0
    elif op == 0x10:
        a = s.pop()
        s[-1] = 1 if a < s[-1] else 0
    elif op == 0x11:
        a = s.pop()
        s[-1] = 1 if a > s[-1] else 0
    elif op == 0x14:
        a = s.pop()
        s[-1] = 1 if a == s[-1] else 0
    elif op == 0x15:
        s[-1] = 1 if s[-1] == 0 else 0
    elif op == 0x16:
        a = s.pop()
        s[-1] &= a
    elif op == 0x17:
        a = s.pop()
        s[-1] |= a
    elif op == 0x18:
        a = s.pop()
        s[-1] ^= a
    elif op == 0x19:
        s[-1] = MASK ^ s[-1]
    elif op == 0x50:
        s.pop()
    elif op == 0x5B:
        pass
    elif op == 0x56:
        dest = s.pop()
        tgt = c.program.content.get(dest)
        if tgt is None or tgt.op != 0x5B:
            return _fail(v, f"bad jump destination {dest}")
        v.pc = dest
        return InstructionContinue(v)
    elif op == 0x57:
        dest = s.pop()
        cond = s.pop()
        if cond:
            tgt = c.program.content.get(dest)
            if tgt is None or tgt.op != 0x5B:
                return _fail(v, f"bad jump destination {dest}")
            v.pc = dest
            return InstructionContinue(v)
    elif op == 0x54:
        s[-1] = v.storage.get(s[-1], 0)
    elif op == 0x55:
        key = s.pop()
        val = s.pop()
        if val:
            v.storage[key] = val
        else:
            v.storage.pop(key, None)
    elif op == 0x52:
        off = s.pop()
        val = s.pop()
        _touch(v, off, 32)
        v.memory[off:off + 32] = val.to_bytes(32, "big")
    elif op == 0x51:
        off = s[-1]
        s[-1] = int.from_bytes(_mread(v, off, 32), "big")
    elif op == 0x20:
        off = s.pop()
        size = s[-1]
        s[-1] = keccak256(_mread(v, off, size))
    elif op == 0x30:
        s.append(c.address)
    elif op == 0x31:
        s[-1] = v.balances.get(s[-1] & ADDRESS_MASK, 0)
    elif op == 0x33:
        s.append(c.caller)
    elif op == 0x34:
        s.append(c.callvalue)
    elif op == 0x43:
        s.append(c.block_number)
    elif op == 0x35:
        off = s[-1]
        chunk = c.calldata[off:off + 32] if off < len(c.calldata) else b""
        s[-1] = int.from_bytes(chunk + bytes(32 - len(chunk)), "big")
    elif op == 0x36:
        s.append(len(c.calldata))
    elif op == 0x38:
        s.append(c.program.length)
    elif op == 0x37 or op == 0x39:
        dest = s.pop()
        off = s.pop()
        size = s.pop()
        src = c.calldata if op == 0x37 else c.program.code
        chunk = src[off:off + size] if off < len(src) else b""
        _touch(v, dest, size)
        v.memory[dest:dest + size] = chunk + bytes(size - len(chunk))
    elif 0xA0 <= op <= 0xA4:
        off = s.pop()
        size = s.pop()
        topics = [s.pop() for _ in range(op - 0xA0)]
        v.logs.append((tuple(topics), _mread(v, off, size)))
    elif op == 0xF1:
        _gas = s.pop()
        to = s.pop() & ADDRESS_MASK
        value = s.pop()
        in_off, in_size, out_off, out_size = s.pop(), s.pop(), s.pop(), s.pop()
        _touch(v, in_off, in_size)
        _touch(v, out_off, out_size)
        me = c.address & ADDRESS_MASK
        have = v.balances.get(me, 0)
        if value > have:
            s.append(0)
        else:
            if value and to != me:
                v.balances[me] = have - value
                v.balances[to] = v.balances.get(to, 0) + value
            s.append(1)
    elif op == 0xF3 or op == 0xFD:
        off = s.pop()
        size = s.pop()
        data = _mread(v, off, size)
        act = ContractReturn(data) if op == 0xF3 else ContractRevert(data)
        return InstructionToEnvironment(act, v, (off, size))
    elif op == 0x00:
        return InstructionToEnvironment(ContractReturn(b""), v)
    else:  # pragma: no cover - table and dispatcher out of sync
        return _fail(v, f"unimplemented opcode {info[0]}")
    v.pc = nxt
    return InstructionContinue(v)


def next_state(c: ConstantCtx, r):
    if not isinstance(r, InstructionContinue):
        return r
    v = r.v
    i = c.program.content.get(v.pc)
    if i is None:  # running off the end behaves as STOP
        return InstructionToEnvironment(ContractReturn(b""), v)
    return instruction_sem(c, v, i)


def program_sem(c: ConstantCtx, fuel: int, r, trace: Optional[list] = None):
    content = c.program.content
    while fuel > 0 and type(r) is InstructionContinue:
        v = r.v
        i = content.get(v.pc)
        if trace is not None:
            trace.append({"pc": v.pc, "op": i.name if i else "STOP",
                          "gas": v.gas, "stack": [hex(x) for x in v.stack]})
        if i is None:
            return InstructionToEnvironment(ContractReturn(b""), v)
        r = instruction_sem(c, v, i)
        fuel -= 1
    return r


# --------------------------------------------------------------- transactions

@dataclass
class Account:
    balance: int = 0
    nonce: int = 0
    code: bytes = b""
    storage: dict = field(default_factory=dict)

    def copy(self) -> "Account":
        return Account(self.balance, self.nonce, self.code, dict(self.storage))


@dataclass
class Tx:
    sender: int
    to: Optional[int]            # None deploys ``data`` as init code
    data: bytes = b""
    value: int = 0
    gas_limit: int = 3_000_000
    block_number: int = 0


@dataclass
class Receipt:
    success: bool
    status: str                  # success | revert | fail
    return_data: bytes
    gas_used: int
    storage_delta: dict
    logs: list
    contract_address: Optional[int] = None
    error: str = ""
    trace: Optional[list] = None

    def to_json(self) -> dict:
        d = {
            "success": self.success,
            "status": self.status,
            "return_data": "0x" + self.return_data.hex(),
            "gas_used": self.gas_used,
            "storage_delta": {hex(k): hex(v) for k, v in sorted(self.storage_delta.items())},
            "logs": [{"address": hex(a), "topics": [hex(t) for t in ts], "data": "0x" + dt.hex()}
                     for a, ts, dt in self.logs],
        }
        if self.contract_address is not None:
            d["contract_address"] = hex(self.contract_address)
        if self.error:
            d["error"] = self.error
        return d


def _rlp_bytes(b: bytes) -> bytes:
    if len(b) == 1 and b[0] < 0x80:
        return b
    return bytes([0x80 + len(b)]) + b


def create_address(sender: int, nonce: int) -> int:
    nb = nonce.to_bytes((nonce.bit_length() + 7) // 8, "big") if nonce else b""
    payload = _rlp_bytes(sender.to_bytes(20, "big")) + _rlp_bytes(nb)
    return int.from_bytes(keccak256_bytes(bytes([0xC0 + len(payload)]) + payload)[12:], "big")


def run_code(code: bytes, storage: dict, balances: dict, address: int, calldata: bytes,
             caller: int, callvalue: int, block_number: int, gas: int,
             fuel: int = DEFAULT_FUEL, trace: Optional[list] = None):
    prog = EvmProgram.from_bytes(code)
    c = ConstantCtx(prog, address, calldata, caller, callvalue, block_number)
    v = VariableCtx(storage=dict(storage), gas=gas, balances=dict(balances))
    return program_sem(c, fuel, InstructionContinue(v), trace)


def run_transaction(world: dict, tx: Tx, trace: bool = False, fuel: int = DEFAULT_FUEL) -> Receipt:
    """Execute ``tx`` against ``world`` (address -> Account), updating it on success."""
    create = tx.to is None
    if not create and tx.to not in world:
        raise UnknownAccount(f"no account at {tx.to:#x}")
    sender = world.setdefault(tx.sender, Account())
    intrinsic = F.intrinsic_gas(tx.data, create)
    if tx.gas_limit < intrinsic:
        return Receipt(False, "fail", b"", tx.gas_limit, {}, [], error="intrinsic gas exceeds gas limit")
    if sender.balance < tx.value:
        return Receipt(False, "fail", b"", tx.gas_limit, {}, [], error="insufficient balance for value")

    nonce = sender.nonce
    sender.nonce += 1
    if create:
        target = create_address(tx.sender, nonce)
        code, calldata, pre_storage = tx.data, b"", {}
    else:
        target = tx.to
        code, calldata, pre_storage = world[target].code, tx.data, world[target].storage

    balances = {a: acct.balance for a, acct in world.items() if acct.balance}
    balances[tx.sender] = balances.get(tx.sender, 0) - tx.value
    balances[target] = balances.get(target, 0) + tx.value

    steps = [] if trace else None
    res = run_code(code, pre_storage, balances, target, calldata, tx.sender, tx.value,
                   tx.block_number, tx.gas_limit - intrinsic, fuel, steps)
    v = res.v
    if isinstance(res, InstructionContinue):
        return Receipt(False, "fail", b"", tx.gas_limit, {}, [], error="fuel exhausted", trace=steps)
    act = res.action
    if isinstance(act, ContractFail):
        return Receipt(False, "fail", b"", tx.gas_limit, {}, [], error=act.reason, trace=steps)
    gas_used = tx.gas_limit - v.gas
    if isinstance(act, ContractRevert):
        return Receipt(False, "revert", act.data, gas_used, {}, [], trace=steps)

    ret = act.data
    if create:
        deposit = F.G_CODEDEPOSIT * len(ret)
        if deposit > v.gas:
            return Receipt(False, "fail", b"", tx.gas_limit, {}, [], error="code deposit out of gas",
                           trace=steps)
        gas_used += deposit
        world[target] = Account(0, 1, ret, {})

    acct = world[target]
    delta = {k: val for k, val in v.storage.items() if pre_storage.get(k, 0) != val}
    delta.update({k: 0 for k in pre_storage if k not in v.storage})
    acct.storage = dict(v.storage)
    for a, bal in v.balances.items():
        world.setdefault(a, Account()).balance = bal
    for a, acc in world.items():
        if acc.balance and a not in v.balances:
            acc.balance = 0
    logs = [(target, t, d) for t, d in v.logs]
    return Receipt(True, "success", ret, gas_used, delta, logs,
                   contract_address=target if create else None, trace=steps)


def copy_world(world: dict) -> dict:
    return {a: acct.copy() for a, acct in world.items()}
