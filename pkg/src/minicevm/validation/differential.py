"""Run transaction sequences through every phase and the EVM, and compare."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..core.machine import MachineEnv
from ..errors import CompileError, InternalError
from ..evm.interp import copy_world, create_address
from ..pipeline.driver import IR_PHASES, Artifact, Chain
from ..pipeline.driver import run_phase
from .relations import rel_events, rel_store, return_word, storage_to_words

DEFAULT_SENDERS = (0xA11CE, 0xB0B, 0xCA201, 0xD00D)
START_BALANCE = 10 ** 24


@dataclass
class TxSpec:
    method: str
    args: tuple = ()
    sender: int = DEFAULT_SENDERS[0]
    value: int = 0
    block: int = 0
    gas_limit: int = 6_000_000

    @classmethod
    def from_json(cls, d: dict) -> "TxSpec":
        def num(x):
            return int(x, 0) if isinstance(x, str) else int(x)
        return cls(d["method"], tuple(num(a) for a in d.get("args", ())),
                   num(d.get("sender", DEFAULT_SENDERS[0])), num(d.get("value", 0)),
                   num(d.get("block", 0)), num(d.get("gas_limit", 6_000_000)))

    def to_json(self) -> dict:
        return {"method": self.method, "args": list(self.args), "sender": hex(self.sender),
                "value": self.value, "block": self.block}


def load_script(path) -> list:
    with open(path) as fh:
        return [TxSpec.from_json(d) for d in json.load(fh)]


@dataclass
class Divergence:
    tx: int
    phase: str
    what: str
    program: int = 0

    def __str__(self):
        return f"program {self.program} tx {self.tx} [{self.phase}] {self.what}"

    def to_json(self) -> dict:
        return {"program": self.program, "tx": self.tx, "phase": self.phase, "what": self.what}


@dataclass
class TxResult:
    spec: TxSpec
    outcomes: dict            # phase -> IrOutcome
    receipt: object
    divergences: list
    trace: list | None = None          # steps of the traced phase, if any


@dataclass
class ValidationReport:
    txs: int = 0
    programs: int = 0
    divergences: list = field(default_factory=list)
    gas_rows: list = field(default_factory=list)       # (tx, method, {phase: gas}, evm gas)

    @property
    def ok(self) -> bool:
        return not self.divergences

    def merge(self, other: "ValidationReport"):
        self.txs += other.txs
        self.programs += other.programs
        self.divergences += other.divergences
        self.gas_rows += other.gas_rows

    def summary(self) -> str:
        return (f"{self.programs} program(s), {self.txs} transaction(s), "
                f"{len(self.divergences)} divergence(s)")

    def to_json(self) -> dict:
        return {"format": "minicevm-validation", "version": 1, "ok": self.ok,
                "programs": self.programs, "transactions": self.txs,
                "divergences": [d.to_json() for d in self.divergences]}


class Session:
    """One deployed contract, mirrored symbolically (per phase) and on the EVM."""

    def __init__(self, art: Artifact, phases=IR_PHASES, senders=DEFAULT_SENDERS,
                 start_balance: int = START_BALANCE, trace_phase: str | None = None):
        self.art = art
        self.phases = tuple(phases)
        self.trace_phase = trace_phase
        self.chain = Chain({s: start_balance for s in senders})
        self.address = None
        self.storage = {}           # HashKey -> Value, as left by the reference
        self.count = 0

    def _env(self, spec: TxSpec) -> MachineEnv:
        bal = {a: acct.balance for a, acct in self.chain.world.items() if acct.balance}
        bal[spec.sender] = bal.get(spec.sender, 0) - spec.value
        bal[self.address] = bal.get(self.address, 0) + spec.value
        return MachineEnv(self.address, spec.sender, spec.value, spec.block, bal)

    def run(self, spec: TxSpec) -> TxResult:
        art, idx = self.art, self.count
        self.count += 1
        ctor = spec.method == "constructor"
        if ctor:
            nonce = self.chain.world.get(spec.sender)
            self.address = create_address(spec.sender, nonce.nonce if nonce else 0)
        elif self.address is None:
            raise InternalError("call before deployment")
        env = self._env(spec)
        pre = dict(self.storage)
        trace = [] if self.trace_phase else None
        outcomes = {ph: run_phase(art, ph, pre, env, spec.method, spec.args,
                                  trace=trace if ph == self.trace_phase else None)
                    for ph in self.phases}
        self.chain.block_number = spec.block
        if ctor:
            rc = self.chain.deploy(art, spec.args, spec.sender, spec.value, spec.gas_limit)
        else:
            rc = self.chain.call(self.address, art, spec.method, spec.args, spec.sender,
                                 spec.value, spec.gas_limit, spec.block)
        divs = self._compare(idx, spec, outcomes, rc)
        ref = outcomes.get("minic") or next(iter(outcomes.values()))
        if ref.success:
            self.storage = dict(ref.storage)
        return TxResult(spec, outcomes, rc, divs, trace)

    def _compare(self, idx, spec, outcomes, rc) -> list:
        divs = []
        evm_store = self.chain.storage(self.address) if self.address in self.chain.world else {}
        evm_bal = {a: acct.balance for a, acct in self.chain.world.items() if acct.balance}
        ctor = spec.method == "constructor"
        prev = None
        for ph, o in outcomes.items():
            if o.success != rc.success:
                divs.append(Divergence(idx, ph, f"success {o.success}, EVM {rc.success} ({rc.status} {rc.error})"))
                continue
            if o.success:
                if not ctor and not return_word(o.value, rc.return_data):
                    divs.append(Divergence(idx, ph, f"returned {o.value!r}, EVM {rc.return_data.hex()}"))
                if not rel_store(o.storage, evm_store):
                    divs.append(Divergence(idx, ph, f"storage {storage_to_words(o.storage)} vs EVM {evm_store}"))
                if not rel_events(o.events, rc.logs):
                    divs.append(Divergence(idx, ph, "events differ"))
                bal = {a: b for a, b in o.balances.items() if b}
                if bal != evm_bal:
                    divs.append(Divergence(idx, ph, f"balances {bal} vs EVM {evm_bal}"))
            if prev is not None and o.gas > prev[1]:
                divs.append(Divergence(idx, ph, f"gas {o.gas} exceeds {prev[0]}'s {prev[1]}"))
            prev = (ph, o.gas)
        if "minic" in outcomes and rc.gas_used > outcomes["minic"].gas:
            divs.append(Divergence(idx, "evm", f"gas used {rc.gas_used} exceeds bound {outcomes['minic'].gas}"))
        if "methodical" in outcomes and rc.success is not None and rc.status != "fail":
            if outcomes["methodical"].gas != rc.gas_used:
                divs.append(Divergence(idx, "methodical",
                                       f"gas {outcomes['methodical'].gas} != EVM {rc.gas_used}"))
        return divs


def differential_run(art: Artifact, txs, phases=IR_PHASES) -> ValidationReport:
    rep = ValidationReport(programs=1)
    s = Session(art, phases)
    for spec in txs:
        if spec.method != "constructor" and s.address not in s.chain.world:
            break               # deployment reverted everywhere; nothing left to call
        r = s.run(spec)
        rep.txs += 1
        rep.divergences += r.divergences
        rep.gas_rows.append((rep.txs - 1, spec.method, {p: o.gas for p, o in r.outcomes.items()},
                             r.receipt.gas_used))
    return rep


@dataclass
class OutOfGasCheck:
    tx: int
    method: str
    gas_used: int
    gas_limit: int
    evm_failed: bool
    storage_unchanged: bool
    reference_completed: bool

    @property
    def ok(self) -> bool:
        return self.evm_failed and self.storage_unchanged and self.reference_completed


def out_of_gas_run(art: Artifact, txs) -> list:
    """Replay every successful transaction with half the gas it needed.

    The replay runs on a copy of the world taken just before the transaction;
    the EVM must fail and leave that copy's storage as it was, while the
    reference semantics (which has no gas limit) still completes.
    """
    out = []
    s = Session(art, ("minic",))
    for spec in txs:
        if spec.method != "constructor" and s.address not in s.chain.world:
            break
        before = copy_world(s.chain.world)
        r = s.run(spec)
        if not r.receipt.success:
            continue
        half = -(-r.receipt.gas_used // 2)
        probe = Chain()
        probe.world = copy_world(before)
        pre = {a: dict(acct.storage) for a, acct in probe.world.items()}
        if spec.method == "constructor":
            rc = probe.deploy(art, spec.args, spec.sender, spec.value, half)
        else:
            rc = probe.call(s.address, art, spec.method, spec.args, spec.sender, spec.value,
                            half, spec.block)
        post = {a: dict(acct.storage) for a, acct in probe.world.items()}
        out.append(OutOfGasCheck(s.count - 1, spec.method, r.receipt.gas_used, half,
                                 rc.status == "fail", pre == post, r.outcomes["minic"].success))
    return out


def compile_or_none(src):
    from ..pipeline.driver import compile_program
    try:
        return compile_program(src)
    except CompileError:
        return None
