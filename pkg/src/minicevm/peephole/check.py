"""Soundness check for rewrite rules.

A rule is first compared symbolically: both sides run on a stack of
unknowns and the resulting terms are normalized. Whatever the outcome, the
rule is then run on random concrete stacks through the EVM instruction
semantics, which is what finds counterexamples for unsound rules.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from ..evm.interp import ConstantCtx, EvmProgram, InstructionContinue, VariableCtx, instruction_sem
from ..evm.opcodes import OPCODES, dup, op, push, swap
from ..errors import RuleUnsound
from .rules import BINARY, COMMUTATIVE, MASK, Rule, eval_term, read_rules, word_op

DEFAULT_SAMPLES = 10_000
EDGE_WORDS = (0, 1, 2, 31, 32, 255, 256, MASK, MASK - 1, 1 << 255, (1 << 160) - 1)


@dataclass
class CheckResult:
    rule: Rule
    sound: bool
    proven: bool = False
    samples: int = 0
    gas_lhs: int = 0
    gas_rhs: int = 0
    counterexample: dict | None = None
    reason: str = ""

    @property
    def cheaper(self) -> bool:
        return self.gas_rhs < self.gas_lhs

    @property
    def ok(self) -> bool:
        return self.sound and self.cheaper

    def summary(self) -> str:
        how = "proved" if self.proven else f"tested on {self.samples} stacks"
        if not self.sound:
            return f"UNSOUND {self.rule.name}: {self.reason}; counterexample {self.counterexample}"
        if not self.cheaper:
            return f"NOT CHEAPER {self.rule.name}: {self.gas_lhs} -> {self.gas_rhs} gas"
        return f"ok {self.rule.name} ({how}, {self.gas_lhs} -> {self.gas_rhs} gas)"


def depth_vars(rule: Rule) -> list:
    return sorted({t.arg for t in rule.lhs if t.kind in ("DUP", "SWAP") and isinstance(t.arg, str)})


def instantiate(side, env: dict) -> list:
    out = []
    for t in side:
        a = t.arg
        if isinstance(a, str):
            a = env[a]
        elif isinstance(a, tuple):
            a = eval_term(a, env)
        if t.kind == "PUSH":
            out.append(push(a))
        elif t.kind == "DUP":
            out.append(dup(a))
        elif t.kind == "SWAP":
            out.append(swap(a))
        else:
            out.append(op(t.kind))
    return out


def static_gas(insts) -> int:
    return sum(OPCODES[i.op][3] for i in insts)


def reach(insts) -> tuple:
    """(items read below the starting top, peak height above it)."""
    h = low = peak = 0
    for i in insts:
        _, pops, pushes, _ = OPCODES[i.op]
        need = i.op - 0x8F + 1 if 0x90 <= i.op <= 0x9F else pops
        low = min(low, h - need)
        h += pushes - pops
        peak = max(peak, h)
    return -low, peak


_CTX = ConstantCtx(EvmProgram({}, 0), 0)


def run_concrete(insts, stack: list):
    v = VariableCtx(stack=list(stack), gas=1 << 62)
    for i in insts:
        r = instruction_sem(_CTX, v, i)
        if type(r) is not InstructionContinue:
            return None
        v = r.v
    return v.stack


# ---------------------------------------------------------------- symbolic

def normalize(t):
    tag = t[0]
    if tag in ("c", "v", "x"):
        return t
    args = [normalize(a) for a in t[1:]]
    if all(a[0] == "c" for a in args):
        return ("c", word_op(tag, *(a[1] for a in args)))
    if tag in COMMUTATIVE:
        args.sort(key=repr)
    zero, one = ("c", 0), ("c", 1)
    if tag in ("ADD", "OR", "XOR") and zero in args:
        return args[1] if args[0] == zero else args[0]
    if tag == "MUL" and one in args:
        return args[1] if args[0] == one else args[0]
    if tag == "SUB" and args[1] == zero:
        return args[0]
    if tag == "EQ" and zero in args:
        other = args[1] if args[0] == zero else args[0]
        return normalize(("ISZERO", other))
    a = args[0]
    if tag == "ISZERO" and a[0] == "ISZERO" and a[1][0] == "ISZERO":
        return a[1]
    if tag == "NOT" and a[0] == "NOT":
        return a[1]
    return (tag, *args)


def run_symbolic(side, env: dict, depth: int):
    stack = [("x", i) for i in reversed(range(depth))]   # x0 on top
    for t in side:
        a = t.arg
        k = env.get(a, a) if isinstance(a, str) else a
        if t.kind == "PUSH":
            stack.append(("v", a) if isinstance(a, str) else a if isinstance(a, tuple) else ("c", a))
        elif t.kind == "DUP":
            if k > len(stack):
                return None
            stack.append(stack[-k])
        elif t.kind == "SWAP":
            if k >= len(stack):
                return None
            stack[-1], stack[-1 - k] = stack[-1 - k], stack[-1]
        elif t.kind == "POP":
            if not stack:
                return None
            stack.pop()
        else:
            n = 2 if t.kind in BINARY else 1
            if len(stack) < n:
                return None
            args = [stack.pop() for _ in range(n)]
            stack.append((t.kind, *args))
    return [normalize(x) for x in stack]


# -------------------------------------------------------------------- check

def _sample_word(rng: random.Random) -> int:
    r = rng.random()
    if r < 0.4:
        return rng.choice(EDGE_WORDS)
    if r < 0.7:
        return rng.randrange(64)
    return rng.getrandbits(256)


def check_rule(rule: Rule, samples: int = DEFAULT_SAMPLES, seed: int = 0) -> CheckResult:
    dvars = depth_vars(rule)
    pvars = sorted(rule.variables() - set(dvars))
    res = CheckResult(rule, True)
    rng = random.Random(seed)

    # shape: reach and gas, for every DUP/SWAP depth instantiation
    dom = list(itertools.product(range(1, 17), repeat=len(dvars)))
    probe = {v: 1 for v in pvars}
    proven = True
    for combo in dom:
        env = dict(zip(dvars, combo), **probe)
        lhs, rhs = instantiate(rule.lhs, env), instantiate(rule.rhs, env)
        (nl, pl), (nr, pr) = reach(lhs), reach(rhs)
        res.gas_lhs, res.gas_rhs = static_gas(lhs), static_gas(rhs)
        if nr > nl or pr > pl:
            res.sound = False
            res.reason = "right-hand side needs more stack than the left"
            res.counterexample = {"bindings": env}
            return res
        sl = run_symbolic(rule.lhs, dict(zip(dvars, combo)), nl)
        sr = run_symbolic(rule.rhs, dict(zip(dvars, combo)), nl)
        if sl is None or sl != sr:
            proven = False
    res.proven = proven

    for n in range(samples):
        env = dict(zip(dvars, rng.choice(dom)))
        for v in pvars:
            env[v] = _sample_word(rng)
        lhs, rhs = instantiate(rule.lhs, env), instantiate(rule.rhs, env)
        need = reach(lhs)[0]
        stack = [_sample_word(rng) for _ in range(need + 1)]
        out_l, out_r = run_concrete(lhs, stack), run_concrete(rhs, stack)
        res.samples = n + 1
        if out_l != out_r:
            res.sound = False
            res.proven = False
            res.reason = "stacks differ"
            res.counterexample = {"bindings": env, "stack_top_last": [hex(x) for x in stack],
                                  "lhs": out_l and [hex(x) for x in out_l],
                                  "rhs": out_r and [hex(x) for x in out_r]}
            return res
    return res


def check_rules(rules, samples: int = DEFAULT_SAMPLES, seed: int = 0) -> list:
    return [check_rule(r, samples, seed + i) for i, r in enumerate(rules)]


_CHECKED = {}


def load_rules(path=None, samples: int = DEFAULT_SAMPLES) -> list:
    """Read and check a rule file; any unsound or non-decreasing rule is rejected.

    Results are cached per file content, so repeated compilations pay once.
    """
    rules = read_rules(path)
    key = (tuple(r.name for r in rules), samples)
    if key not in _CHECKED:
        for res in check_rules(rules, samples):
            if not res.ok:
                raise RuleUnsound(res.rule.name, res.counterexample or res.reason)
        _CHECKED[key] = True
    return rules


__all__ = ["CheckResult", "check_rule", "check_rules", "load_rules", "instantiate", "static_gas", "reach",
           "run_concrete", "run_symbolic", "normalize"]
