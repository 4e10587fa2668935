"""Overflow and division side conditions for typed MiniC programs.

Every add/sub/mul node yields a RangeCheck stating that the mathematical
(unbounded) result lies in [0, 2^width); every div/mod node yields a
NonzeroDivisor. Conditions are reported, never discharged.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

from ..core import ast as A
from ..core.pretty import fmt_expr

INT_WIDTHS = {"Z256": 256, "Z32": 32}


@dataclass(frozen=True)
class SideCondition:
    function: str
    stmt_index: int
    kind: str            # "RangeCheck" or "NonzeroDivisor"
    predicate: str
    expression: str

    def to_json(self) -> str:
        return json.dumps(asdict(self), ensure_ascii=False)


def _stmts_preorder(s):
    """Statements in pre-order; sequences are containers and are not numbered."""
    t = type(s)
    if t is A.Ssequence:
        yield from _stmts_preorder(s.s1)
        yield from _stmts_preorder(s.s2)
        return
    yield s
    if t is A.Sifthenelse:
        yield from _stmts_preorder(s.s1)
        yield from _stmts_preorder(s.s2)
    elif t is A.Sloop:
        yield from _stmts_preorder(s.body)


def _stmt_exprs(s):
    t = type(s)
    if t is A.Sassign:
        return [s.lhs, s.rhs]
    if t is A.Sset:
        return [s.e]
    if t is A.Scall:
        return list(s.args)
    if t is A.Sifthenelse:
        return [s.cond]
    if t is A.Sreturn:
        return [] if s.e is None else [s.e]
    if t is A.Stransfer:
        return [s.to, s.amount]
    if t is A.Scallmethod:
        return [s.addr, s.value, *s.args]
    if t is A.Slog:
        return [*s.topics, *s.data]
    return []


def _subexprs(e):
    yield e
    t = type(e)
    if t is A.Ebinop:
        yield from _subexprs(e.e1)
        yield from _subexprs(e.e2)
    elif t in (A.Eunop, A.Ederef, A.Eaddr, A.Efield, A.Ecall1):
        yield from _subexprs(e.e)
    elif t is A.Eindex:
        yield from _subexprs(e.e)
        yield from _subexprs(e.idx)


def emit_vcs(p: A.Program, width: int = 256) -> list:
    out = []
    for f in p.functions.values():
        names = {t: n for t, (n, _) in f.temps.items()}
        for idx, s in enumerate(_stmts_preorder(f.body)):
            for root in _stmt_exprs(s):
                for e in _subexprs(root):
                    if type(e) is not A.Ebinop:
                        continue
                    text = fmt_expr(e, names)
                    if e.op in A.ARITH_OPS:
                        out.append(SideCondition(f.name, idx, "RangeCheck",
                                                 f"0 ≤ {text} < 2^{width}", text))
                    elif e.op in A.DIV_OPS:
                        d = fmt_expr(e.e2, names)
                        out.append(SideCondition(f.name, idx, "NonzeroDivisor", f"{d} ≠ 0", text))
    return out


def vcs_jsonl(vcs) -> str:
    return "".join(v.to_json() + "\n" for v in vcs)
