"""Apply rewrite rules to Expressionless code until none matches.

Only single-instruction statements with no side effects take part in a
match (pushes of words, DUP, SWAP, POP and the arithmetic operations).
Labels, label pushes and instruction groups are barriers. Every rule is
strictly cheaper than what it replaces, so rewriting terminates.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from ..core.values import MASK, Vint
from ..evm import fees as F
from ..pipeline import expressionless as X
from .rules import BINARY, UNARY, Tok, eval_term

UNOP_NAMES = {"not": "ISZERO", "bitnot": "NOT"}
BINOP_NAMES = {"add": "ADD", "sub": "SUB", "mul": "MUL", "div": "DIV", "mod": "MOD", "lt": "LT",
               "gt": "GT", "eq": "EQ", "and": "AND", "or": "OR", "xor": "XOR"}
UNOP_OF = {v: k for k, v in UNOP_NAMES.items()}
BINOP_OF = {v: k for k, v in BINOP_NAMES.items()}


def token(s):
    """The rule token a statement stands for, or None for barriers."""
    t = type(s)
    if t is X.Xpush:
        return Tok("PUSH", s.v.n) if type(s.v) is Vint else None
    if t is X.Xdup:
        return Tok("DUP", s.n)
    if t is X.Xswap:
        return Tok("SWAP", s.n)
    if t is X.Xpop:
        return Tok("POP")
    if t is X.Xunop and s.op in UNOP_NAMES:
        return Tok(UNOP_NAMES[s.op])
    if t is X.Xbinop and s.op in BINOP_NAMES:
        return Tok(BINOP_NAMES[s.op])
    return None


def statement(tok: Tok):
    k = tok.kind
    if k == "PUSH":
        return X.Xpush(Vint(tok.arg & MASK))
    if k == "DUP":
        return X.Xdup(tok.arg)
    if k == "SWAP":
        return X.Xswap(tok.arg)
    if k == "POP":
        return X.Xpop()
    if k in UNARY:
        return X.Xunop(UNOP_OF[k])
    if k in BINARY:
        return X.Xbinop(BINOP_OF[k])
    raise ValueError(k)


def match(pattern, toks, env: dict) -> bool:
    for p, t in zip(pattern, toks):
        if t is None or p.kind != t.kind:
            return False
        if p.arg is None:
            continue
        if isinstance(p.arg, str):
            bound = env.setdefault(p.arg, t.arg)
            if bound != t.arg:
                return False
        elif p.arg != t.arg:
            return False
    return True


def build(rhs, env: dict) -> list:
    out = []
    for p in rhs:
        a = p.arg
        if isinstance(a, str):
            a = env[a]
        elif isinstance(a, tuple):
            a = eval_term(a, env)
        out.append(statement(Tok(p.kind, a)))
    return out


def tok_gas(t: Tok) -> int:
    if t.kind in ("PUSH", "DUP", "SWAP"):
        return X.STATIC[X.Xdup]
    if t.kind == "POP":
        return X.STATIC[X.Xpop]
    if t.kind in BINARY:
        return X.BINOP_GAS.get(BINOP_OF[t.kind], X.STATIC[X.Xdup])
    return X.STATIC[X.Xdup]


def encoded(stmts) -> bytes:
    from ..evm.backend import image
    return b"".join(i.encode() for s in stmts for i in image(s))


def deploy_cost(code: bytes) -> tuple:
    """(length, transaction data gas) of a code fragment."""
    zeros = code.count(0)
    return len(code), F.G_TXDATAZERO * zeros + F.G_TXDATANONZERO * (len(code) - zeros)


def index_rules(rules) -> dict:
    """Rules grouped by the kind of their first token, keeping file order."""
    idx = {}
    for r in rules:
        idx.setdefault(r.lhs[0].kind, []).append(r)
    return idx


def find_match(code: list, toks: list, rules, start: int = 0):
    """Leftmost match at or after start: (index, rule, env) or None.

    A match whose replacement is longer, or costs more as transaction data,
    is skipped: a folded constant can need a wider push or trade zero bytes
    for nonzero ones, and that makes deployment dearer even when the code
    runs cheaper.
    """
    by_kind = rules if isinstance(rules, dict) else index_rules(rules)
    for i in range(start, len(code)):
        t = toks[i]
        if t is None:
            continue
        for r in by_kind.get(t.kind, ()):
            n = len(r.lhs)
            if i + n > len(code):
                continue
            env = {}
            if match(r.lhs, toks[i:i + n], env) and _no_growth(r, toks[i:i + n], env):
                return i, r, env
    return None


def _no_growth(r, window, env) -> bool:
    if not any(p.kind == "PUSH" for p in r.rhs):
        return True
    new = deploy_cost(encoded(build(r.rhs, env)))
    old = deploy_cost(encoded(statement(t) for t in window))
    return new[0] <= old[0] and new[1] <= old[1]


def rewrite_once(code: list, rules) -> tuple:
    """First match scanning left to right; (new code, rule) or (code, None)."""
    hit = find_match(code, [token(s) for s in code], rules)
    if hit is None:
        return code, None
    i, r, env = hit
    return code[:i] + build(r.rhs, env) + code[i + len(r.lhs):], r


@dataclass
class OptReport:
    fired: Counter = field(default_factory=Counter)
    saved: Counter = field(default_factory=Counter)           # static gas saved per rule
    per_function: dict = field(default_factory=dict)
    sites: list = field(default_factory=list)     # (function, index, rule name, gas saved)

    @property
    def total(self) -> int:
        return sum(self.fired.values())

    @property
    def gas_saved(self) -> int:
        return sum(self.saved.values())

    def lines(self) -> list:
        return [f"{n:5d}  {self.saved[name]:6d} gas  {name}" for name, n in self.fired.most_common()]

    def to_json(self) -> dict:
        return {"version": 1, "total": self.total, "gas_saved": self.gas_saved,
                "rules": [{"rule": name, "fired": n, "gas_saved": self.saved[name]}
                          for name, n in sorted(self.fired.items())],
                "functions": dict(sorted(self.per_function.items()))}


def optimize(code: list, rules, report: OptReport | None = None, fn: str = "", limit: int = 1_000_000) -> list:
    """Rewrite until no rule matches.

    After a rewrite at i the scan resumes at i - (longest lhs) + 1, since no
    match can start earlier than that without having matched before.
    """
    code = list(code)
    toks = [token(s) for s in code]
    back = max((len(r.lhs) for r in rules), default=1) - 1
    rules = index_rules(rules)
    pos = 0
    for _ in range(limit):
        hit = find_match(code, toks, rules, pos)
        if hit is None:
            return code
        i, r, env = hit
        new = build(r.rhs, env)
        n = len(r.lhs)
        code[i:i + n] = new
        new_toks = [token(s) for s in new]
        if report is not None:
            saved = sum(map(tok_gas, toks[i:i + n])) - sum(map(tok_gas, new_toks))
            report.fired[r.name] += 1
            report.saved[r.name] += saved
            report.per_function[fn] = report.per_function.get(fn, 0) + 1
            report.sites.append((fn, i, r.name, saved))
        toks[i:i + n] = new_toks
        pos = max(0, i - back)
    raise RuntimeError("rewrite limit reached; a rule is not decreasing")


def optimize_program(p: X.XProgram, rules) -> tuple:
    report = OptReport()
    fns = {}
    for name, f in p.functions.items():
        code = optimize(list(f.code), rules, report, name)
        fns[name] = X.XFunction(f.name, f.kind, f.nparams, f.nslots, code, f.returns,
                                f.abi_signature, f.selector)
    return X.XProgram(p.name, fns, p.nmethods, dict(p.events)), report


__all__ = ["optimize", "optimize_program", "rewrite_once", "find_match", "OptReport", "token",
           "statement", "tok_gas", "deploy_cost", "index_rules"]
