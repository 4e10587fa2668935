"""Expressionless code: every statement is one EVM instruction or a short,
fixed instruction group (hashing, logging, transfers, returns).

The same machine (``XMachine``) runs both this level and Methodical code.
Expressionless charges memory expansion as if memory were empty before each
statement; Methodical tracks the real high-water mark.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .. import gastable as G
from ..core import ast as A
from ..core.values import MASK, VUNIT, Label, Vint, as_word
from ..errors import CallInConstructor, InternalError, StackTooDeep, StuckState, UnresolvedLabel
from ..evm import fees as F
from .clinear import dispatch_gas, entry_label
from .runtime import Finalstate, Genv, Initialstate, binop, builtin0, sload, sstore, store_cost_args, unop
from . import stacked as K

MAX_REACH = 16
COMMUTATIVE = {"add", "mul", "and", "or", "xor", "eq", "ne"}
# ops with no single EVM instruction: (base op, then ISZERO)
NEGATED = {"ne": "eq", "le": "gt", "ge": "lt"}


@dataclass(frozen=True)
class Xpush:
    v: object               # Vint or Label


@dataclass(frozen=True)
class Xdup:
    n: int


@dataclass(frozen=True)
class Xswap:
    n: int


@dataclass(frozen=True)
class Xpop:
    pass


@dataclass(frozen=True)
class Xsload:
    pass


@dataclass(frozen=True)
class Xsstore:
    pass


@dataclass(frozen=True)
class Xunop:
    op: str                 # not, bitnot, sha1


@dataclass(frozen=True)
class Xbinop:
    op: str                 # first operand is on top


@dataclass(frozen=True)
class Xcall0:
    builtin: str


@dataclass(frozen=True)
class Xcall1:
    builtin: str


@dataclass(frozen=True)
class Xlabel:
    label: Label


@dataclass(frozen=True)
class Xjump:
    pass


@dataclass(frozen=True)
class Xjumpi:
    pass


@dataclass(frozen=True)
class Xtransfer:
    pass


@dataclass(frozen=True)
class Xlog:
    ntopics: int
    ndata: int


@dataclass(frozen=True)
class Xrevert:
    pass


@dataclass(frozen=True)
class Xdone:
    kind: A.FunctionKind
    nslots: int
    has_value: bool


@dataclass(frozen=True)
class Xcalldataload:
    pass


@dataclass(frozen=True)
class Xconstructordataload:
    index: int
    nargs: int


SINGLE = (Xpush, Xdup, Xswap, Xpop, Xsload, Xsstore, Xcall0, Xcall1, Xlabel, Xjump, Xjumpi,
          Xcalldataload)


@dataclass
class XFunction:
    name: str
    kind: A.FunctionKind
    nparams: int
    nslots: int
    code: list
    returns: bool = False
    abi_signature: str = ""
    selector: object = None


@dataclass
class XProgram:
    name: str
    functions: dict
    nmethods: int
    events: dict = field(default_factory=dict)


# ---------------------------------------------------------------- translation

def _reach(n: int, what: str) -> int:
    if n > MAX_REACH:
        raise StackTooDeep(f"{what}{n} needed; the EVM reaches only {MAX_REACH} deep")
    return n


def expr_code(e, h: int = 0) -> list:
    """Push ``e``; ``h`` counts items pushed since the statement started."""
    t = type(e)
    if t is A.Etemp:
        return [Xdup(_reach(e.id + 1 + h, "DUP"))]
    if t is A.Eint256:
        return [Xpush(Vint(e.value & MASK))]
    if t is A.Ederef:
        return expr_code(e.e, h) + [Xsload()]
    if t is A.Eunop:
        return expr_code(e.e, h) + [Xunop(e.op)]
    if t is A.Ecall0:
        return [Xcall0(e.builtin)]
    if t is A.Ecall1:
        return expr_code(e.e, h) + [Xcall1(e.builtin)]
    if t is A.Ebinop:
        if e.op in COMMUTATIVE:
            code = expr_code(e.e1, h) + expr_code(e.e2, h + 1)
        else:
            code = expr_code(e.e2, h) + expr_code(e.e1, h + 1)
        if e.op in NEGATED:
            return code + [Xbinop(NEGATED[e.op]), Xunop("not")]
        return code + [Xbinop(e.op)]
    raise InternalError(f"no Expressionless form for {e!r}")


def to_expressionless(f: K.StFunction) -> XFunction:
    out = []
    for s in f.code:
        t = type(s)
        if t is K.Krvalue:
            out += expr_code(s.e)
        elif t is K.Klabel:
            out.append(Xlabel(s.label))
        elif t is K.Kpushlabel:
            out.append(Xpush(s.label))
        elif t is K.Kset:
            out += [Xswap(_reach(s.depth + 1, "SWAP")), Xpop()]
        elif t is K.Kpop:
            out.append(Xpop())
        elif t is K.Ksstore:
            out.append(Xsstore())
        elif t is K.Kjump:
            out += [Xpush(s.label), Xjump()]
        elif t is K.Kjumpi:
            out += [Xpush(s.label), Xjumpi()]
        elif t is K.Kcall:
            if f.kind == A.FunctionKind.CONSTRUCTOR:
                raise CallInConstructor(f"constructor calls {s.fn}")
            out += [Xpush(entry_label(s.fn)), Xjump()]
        elif t is K.Kfetchargs:
            if f.kind == A.FunctionKind.CONSTRUCTOR:
                out += [Xconstructordataload(i, s.n) for i in range(s.n)]
            else:
                for i in range(s.n):
                    out += [Xpush(Vint(4 + 32 * i)), Xcalldataload()]
        elif t is K.Kintro:
            out += [Xpush(Vint(0))] * s.n
        elif t is K.Kdone:
            out.append(Xdone(f.kind, f.nslots, s.has_value))
        elif t is K.Ktransfer:
            out.append(Xtransfer())
        elif t is K.Klog:
            out.append(Xlog(s.ntopics, s.ndata))
        elif t is K.Krevert:
            out.append(Xrevert())
        else:
            raise InternalError(f"no Expressionless form for {s!r}")
    return XFunction(f.name, f.kind, f.nparams, f.nslots, out, f.returns, f.abi_signature,
                     f.selector)


def expressionless_program(p: K.StProgram) -> XProgram:
    return XProgram(p.name, {n: to_expressionless(f) for n, f in p.functions.items()},
                    p.nmethods, dict(p.events))


# ----------------------------------------------------------------------- gas

STATIC = {Xpush: F.G_VERYLOW, Xdup: F.G_VERYLOW, Xswap: F.G_VERYLOW, Xpop: F.G_BASE,
          Xsload: F.G_SLOAD, Xcall0: F.G_BASE, Xcall1: F.G_BALANCE, Xlabel: F.G_JUMPDEST,
          Xjump: F.G_MID, Xjumpi: F.G_HIGH, Xcalldataload: F.G_VERYLOW, Xrevert: 2 * F.G_VERYLOW}
BINOP_GAS = {"mul": F.G_LOW, "div": F.G_LOW, "mod": F.G_LOW}
SHA3_WORD = 6
# instruction groups, memory and SHA3 word costs excluded
SHA1_BASE = 4 * F.G_VERYLOW + F.G_SHA3
SHA2_BASE = 6 * F.G_VERYLOW + F.G_SHA3
CDATA_BASE = 6 * F.G_VERYLOW + F.G_BASE + F.G_COPY + F.G_VERYLOW
METHOD_RETURN = 4 * F.G_VERYLOW
METHOD_STOP = 2 * F.G_VERYLOW


def private_done_gas(nslots: int, has_value: bool) -> int:
    if not has_value:
        return F.G_BASE * nslots + F.G_MID
    if nslots == 0:
        return F.G_VERYLOW + F.G_MID
    return 2 * F.G_VERYLOW + F.G_BASE * nslots + F.G_MID


# ------------------------------------------------------------------- machine

@dataclass
class XState:
    seg: str
    pc: int
    stack: list
    mem_words: int = 0


class XMachine:
    """Small-step machine over named code segments.

    ``exact_memory`` selects real memory accounting. ``revert_label`` names
    the shared revert block that a failed transfer jumps to; without it a
    failed transfer ends the run directly.
    """

    def __init__(self, segments: dict, exact_memory: bool = False, revert_label=None,
                 entries: dict | None = None, prelude_gas=None):
        self.segments = segments
        self.exact_memory = exact_memory
        self.revert_label = revert_label
        self.labels = {}
        for name, code in segments.items():
            for i, s in enumerate(code):
                if type(s) is Xlabel:
                    self.labels[s.label] = (name, i)
        self.entries = entries or {}
        self.prelude_gas = prelude_gas or (lambda fn: 0)

    def start(self, genv: Genv, fn: str) -> XState:
        genv.gas += self.prelude_gas(fn)
        seg, pc = self.entries.get(fn) or self.entries.get("*") or (fn, 0)
        return XState(seg, pc, [])

    def _mem(self, st: XState, nbytes: int) -> int:
        need = F.words_for(nbytes)
        if not self.exact_memory:
            return F.mem_cost(need)
        if need <= st.mem_words:
            return 0
        extra = F.mem_cost(need) - F.mem_cost(st.mem_words)
        st.mem_words = need
        return extra

    def _goto(self, st: XState, target) -> XState:
        if type(target) is not Label:
            raise StuckState(f"jump to non-label {target!r}")
        try:
            st.seg, st.pc = self.labels[target]
        except KeyError:
            raise UnresolvedLabel(f"unresolved label {target}") from None
        return st

    def step(self, genv: Genv, st):
        if type(st) is Initialstate:
            return self.start(genv, st.fn)
        code = self.segments[st.seg]
        if st.pc >= len(code):
            raise StuckState(f"{st.seg}: control ran past the end of the code")
        s = code[st.pc]
        st.pc += 1
        stack = st.stack
        t = type(s)

        def pop():
            if not stack:
                raise StuckState(f"stack underflow at {s!r}")
            return stack.pop()

        if t in STATIC:
            genv.gas += STATIC[t]
        if t is Xpush:
            stack.append(s.v)
        elif t is Xdup:
            if s.n > len(stack):
                raise StuckState("DUP below the stack bottom")
            stack.append(stack[-s.n])
        elif t is Xswap:
            if s.n >= len(stack):
                raise StuckState("SWAP below the stack bottom")
            stack[-1], stack[-1 - s.n] = stack[-1 - s.n], stack[-1]
        elif t is Xpop:
            pop()
        elif t is Xsload:
            stack.append(sload(genv.storage, pop()))
        elif t is Xsstore:
            addr = pop()
            v = pop()
            old, new = store_cost_args(genv.storage, addr, v)
            genv.gas += G.sstore(old, new)
            sstore(genv.storage, addr, v)
        elif t is Xunop:
            if s.op == "sha1":
                genv.gas += SHA1_BASE + SHA3_WORD + self._mem(st, 32)
            else:
                genv.gas += F.G_VERYLOW
            stack.append(unop(s.op, pop()))
        elif t is Xbinop:
            a = pop()
            b = pop()
            if s.op == "sha2":
                genv.gas += SHA2_BASE + 2 * SHA3_WORD + self._mem(st, 64)
            else:
                genv.gas += BINOP_GAS.get(s.op, F.G_VERYLOW)
            stack.append(binop(s.op, a, b))
        elif t is Xcall0:
            stack.append(builtin0(genv.env, s.builtin))
        elif t is Xcall1:
            stack.append(Vint(genv.env.balance_of(as_word(pop()))))
        elif t is Xlabel:
            pass
        elif t is Xjump:
            return self._goto(st, pop())
        elif t is Xjumpi:
            target = pop()
            if as_word(pop()):
                return self._goto(st, target)
        elif t is Xcalldataload:
            off = as_word(pop())
            word = genv.calldata[off:off + 32] if off < len(genv.calldata) else b""
            stack.append(Vint(int.from_bytes(word.ljust(32, b"\0"), "big")))
        elif t is Xconstructordataload:
            genv.gas += CDATA_BASE + self._mem(st, 32)
            if s.index >= len(genv.args):
                raise StuckState("constructor argument missing")
            stack.append(genv.args[s.index])
        elif t is Xtransfer:
            to = as_word(pop())
            amount = as_word(pop())
            ok = genv.env.transfer(to, amount)
            genv.gas += G.transfer(amount, ok)
            if not ok:
                if self.revert_label is None:
                    return Finalstate(False, reason="transfer failed")
                genv.gas -= F.G_JUMPDEST + G.REVERT
                return self._goto(st, self.revert_label)
        elif t is Xlog:
            data = tuple(as_word(pop()) for _ in range(s.ndata))
            topics = tuple(as_word(pop()) for _ in range(s.ntopics))
            genv.gas += (G.log(s.ntopics, s.ndata) - F.mem_cost(s.ndata)
                         + self._mem(st, 32 * s.ndata))
            genv.events.append((topics, data))
        elif t is Xrevert:
            return Finalstate(False, reason="revert")
        elif t is Xdone:
            return self._done(genv, st, s, pop)
        else:
            raise InternalError(f"XMachine cannot step {s!r}")
        return st

    def _done(self, genv, st, s, pop):
        if s.kind == A.FunctionKind.METHOD:
            if s.has_value:
                genv.gas += METHOD_RETURN + self._mem(st, 32)
                return Finalstate(True, pop())
            genv.gas += METHOD_STOP
            return Finalstate(True, VUNIT)
        if s.kind == A.FunctionKind.CONSTRUCTOR:
            w = F.words_for(genv.runtime_len)
            genv.gas += (G.TABLE["done_constructor"] + F.G_COPY * w
                         + self._mem(st, genv.runtime_len))
            return Finalstate(True, VUNIT)
        genv.gas += private_done_gas(s.nslots, s.has_value)
        v = pop() if s.has_value else None
        for _ in range(s.nslots):
            pop()
        target = pop()
        if s.has_value:
            st.stack.append(v)
        return self._goto(st, target)


def expressionless_machine(p: XProgram) -> XMachine:
    def prelude(fn):
        f = p.functions[fn]
        return dispatch_gas(p.nmethods) if f.kind == A.FunctionKind.METHOD else 0
    return XMachine({n: f.code for n, f in p.functions.items()}, prelude_gas=prelude)

