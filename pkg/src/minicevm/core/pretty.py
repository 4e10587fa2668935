"""Human-readable rendering of MiniC/Clike expressions and statements."""
from __future__ import annotations

from . import ast as A

BINOP_TEXT = {"add": "+", "sub": "-", "mul": "*", "div": "/", "mod": "%", "eq": "=",
              "ne": "<>", "lt": "<", "gt": ">", "le": "<=", "ge": ">=", "and": "&",
              "or": "|", "xor": "^"}
UNOP_TEXT = {"not": "!", "bitnot": "~"}
BUILTIN_TEXT = {"caller": "msg_sender", "callvalue": "msg_value", "address": "this_address",
                "number": "block_number"}
PREC = {"or": 1, "xor": 2, "and": 3, "eq": 4, "ne": 4, "lt": 4, "gt": 4, "le": 4, "ge": 4,
        "add": 5, "sub": 5, "mul": 6, "div": 6, "mod": 6}


def fmt_expr(e, names=None, _prec=0) -> str:
    names = names or {}
    t = type(e)
    if t in (A.Eint, A.Eint256):
        return str(e.value)
    if t in (A.Evar, A.Eglob):
        return e.name
    if t is A.Etemp:
        return names.get(e.id, f"t{e.id}")
    if t is A.Ederef:
        return f"*({fmt_expr(e.e, names)})"
    if t is A.Eaddr:
        return f"&({fmt_expr(e.e, names)})"
    if t is A.Eunop:
        if e.op == "sha1":
            return f"sha1({fmt_expr(e.e, names)})"
        return UNOP_TEXT[e.op] + fmt_expr(e.e, names, 9)
    if t is A.Ebinop:
        if e.op == "sha2":
            return f"sha2({fmt_expr(e.e1, names)}, {fmt_expr(e.e2, names)})"
        p = PREC[e.op]
        s = f"{fmt_expr(e.e1, names, p)} {BINOP_TEXT[e.op]} {fmt_expr(e.e2, names, p + 1)}"
        return f"({s})" if p < _prec else s
    if t is A.Efield:
        return f"{fmt_expr(e.e, names, 9)}.{e.name}"
    if t is A.Eindex:
        return f"{fmt_expr(e.e, names, 9)}[{fmt_expr(e.idx, names)}]"
    if t is A.Ecall0:
        return BUILTIN_TEXT.get(e.builtin, e.builtin)
    if t is A.Ecall1:
        return f"{e.builtin}({fmt_expr(e.e, names)})"
    raise TypeError(f"not an expression: {e!r}")


def fmt_stmt(s, names=None, depth=0) -> str:
    names = names or {}
    pad = "  " * depth
    t = type(s)
    if t is A.Sskip:
        return pad + "skip"
    if t is A.Sassign:
        return f"{pad}{fmt_expr(s.lhs, names)} := {fmt_expr(s.rhs, names)}"
    if t is A.Sset:
        return f"{pad}{names.get(s.temp, f't{s.temp}')} = {fmt_expr(s.e, names)}"
    if t is A.Scall:
        call = f"{s.fn}({', '.join(fmt_expr(a, names) for a in s.args)})"
        if s.ret is None:
            return pad + call
        return f"{pad}{names.get(s.ret, f't{s.ret}')} = {call}"
    if t is A.Ssequence:
        return "\n".join(fmt_stmt(x, names, depth) for x in A.flatten_seq(s))
    if t is A.Sifthenelse:
        return (f"{pad}if {fmt_expr(s.cond, names)} {{\n{fmt_stmt(s.s1, names, depth + 1)}\n"
                f"{pad}}} else {{\n{fmt_stmt(s.s2, names, depth + 1)}\n{pad}}}")
    if t is A.Sloop:
        return f"{pad}loop {{\n{fmt_stmt(s.body, names, depth + 1)}\n{pad}}}"
    if t is A.Sbreak:
        return pad + "break"
    if t is A.Sreturn:
        return pad + "return" + ("" if s.e is None else " " + fmt_expr(s.e, names))
    if t is A.Stransfer:
        return f"{pad}transfer({fmt_expr(s.to, names)}, {fmt_expr(s.amount, names)})"
    if t is A.Scallmethod:
        return f"{pad}callmethod({fmt_expr(s.addr, names)}, {s.selector:#x})"
    if t is A.Slog:
        ts = ", ".join(fmt_expr(x, names) for x in s.topics)
        ds = ", ".join(fmt_expr(x, names) for x in s.data)
        return f"{pad}log([{ts}], [{ds}])"
    if t is A.Srevert:
        return pad + "revert"
    raise TypeError(f"not a statement: {s!r}")


def fmt_function(f: A.Function) -> str:
    names = {t: n for t, (n, _) in f.temps.items()}
    params = ", ".join(names[p] for p in f.params)
    return f"{f.kind.value} {f.name}({params}) {{\n{fmt_stmt(f.body, names, 1)}\n}}"
