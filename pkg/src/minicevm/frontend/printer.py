"""Pretty-printer whose output parses back to the same tree."""
from __future__ import annotations

from .parser import LEVELS, NONASSOC, PRECEDENCE
from .syntax import (Assert, Assign, BinOp, BoolLit, CallE, Emit, EventDecl, ExprCmd,
                     FieldE, For, If, IndexE, LayerDecl, Let, Method, Num, ObjectDecl,
                     Revert, Seq, Signature, StateVar, TransferEth, TyArray, TyMapping,
                     TyName, TypeDecl, UnitLit, UnOp, Var)

IND = "  "
ATOM_LEVEL = len(LEVELS) + 2


def fmt_type(t) -> str:
    if isinstance(t, TyName):
        return t.name
    if isinstance(t, TyMapping):
        return f"mapping[{fmt_type(t.key)}] {fmt_type(t.val)}"
    if isinstance(t, TyArray):
        return f"array[{t.length}] {fmt_type(t.elem)}"
    raise TypeError(t)


def _level(e) -> int:
    if isinstance(e, BinOp):
        return PRECEDENCE[e.op]
    if isinstance(e, UnOp):
        return len(LEVELS)
    return ATOM_LEVEL


def fmt_expr(e) -> str:
    if isinstance(e, Num):
        return str(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, UnitLit):
        return "()"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, CallE):
        return f"{e.fn}({', '.join(fmt_expr(a) for a in e.args)})"
    if isinstance(e, IndexE):
        return f"{_wrap(e.e, ATOM_LEVEL)}[{fmt_expr(e.idx)}]"
    if isinstance(e, FieldE):
        return f"{_wrap(e.e, ATOM_LEVEL)}.{e.name}"
    if isinstance(e, UnOp):
        return f"{e.op}{_wrap(e.e, len(LEVELS))}"
    if isinstance(e, BinOp):
        lv = PRECEDENCE[e.op]
        left_min = lv + 1 if lv == NONASSOC else lv
        return f"{_wrap(e.left, left_min)} {e.op} {_wrap(e.right, lv + 1)}"
    raise TypeError(e)


def _wrap(e, min_level) -> str:
    s = fmt_expr(e)
    return s if _level(e) >= min_level else f"({s})"


def _block(c, depth) -> str:
    pad = IND * depth
    return f"begin\n{fmt_cmd(c, depth + 1)}\n{pad}end"


def fmt_cmd(c, depth=0) -> str:
    pad = IND * depth
    if isinstance(c, Seq):
        first = c.first
        if isinstance(first, (Seq, Let)):
            head = pad + _block(first, depth)
        else:
            head = fmt_cmd(first, depth)
        return f"{head};\n{fmt_cmd(c.second, depth)}"
    if isinstance(c, Let):
        return f"{pad}let {c.name} = {_simple_inline(c.value, depth)} in\n{fmt_cmd(c.body, depth)}"
    if isinstance(c, If):
        s = f"{pad}if {fmt_expr(c.cond)} then {_block(c.then, depth)}"
        if c.orelse is not None:
            s += f" else {_block(c.orelse, depth)}"
        return s
    if isinstance(c, For):
        return (f"{pad}for {c.var} = {fmt_expr(c.lo)} to {fmt_expr(c.hi)} do\n"
                f"{fmt_cmd(c.body, depth + 1)}\n{pad}done")
    if isinstance(c, Assert):
        return f"{pad}assert({fmt_expr(c.cond)})"
    if isinstance(c, Revert):
        return f"{pad}revert"
    if isinstance(c, Assign):
        return f"{pad}{fmt_expr(c.target)} := {fmt_expr(c.value)}"
    if isinstance(c, Emit):
        return f"{pad}emit {c.event}({', '.join(fmt_expr(a) for a in c.args)})"
    if isinstance(c, TransferEth):
        return f"{pad}transferEth({fmt_expr(c.to)}, {fmt_expr(c.amount)})"
    if isinstance(c, ExprCmd):
        return pad + fmt_expr(c.e)
    raise TypeError(c)


def _simple_inline(c, depth) -> str:
    if isinstance(c, (Seq, Let, If, For)):
        return _block(c, depth)
    return fmt_cmd(c, 0)


def fmt_decl(d) -> str:
    if isinstance(d, TypeDecl):
        fields = "; ".join(f"{n} : {fmt_type(t)}" for n, t in d.fields)
        return f"type {d.name} = {{ {fields} }}"
    if isinstance(d, EventDecl):
        ps = ", ".join(("indexed " if ix else "") + fmt_type(t) for t, ix in d.params)
        return f"event {d.name}({ps})"
    if isinstance(d, Signature):
        lines = [f"object signature {d.name} = {{"]
        for e in d.entries:
            args = " * ".join(fmt_type(a) for a in e.args) if e.args else "unit"
            lines.append(f"{IND}{'const ' if e.const else ''}{e.name} : {args} -> {fmt_type(e.ret)};")
        lines.append("}")
        return "\n".join(lines)
    if isinstance(d, ObjectDecl):
        head = f"object {d.name}" + (f" : {d.signature}" if d.signature else "")
        lines = [head + " {"]
        for m in d.members:
            lines.append(fmt_member(m))
        lines.append("}")
        return "\n".join(lines)
    if isinstance(d, LayerDecl):
        under = "{" + "; ".join(d.underlay) + "}" if d.underlay else "{}"
        binds = "; ".join(f"{f} = {o}" for f, o in d.bindings)
        return f"layer {d.name} : [{under}] {d.signature} = {{ {binds} }}"
    raise TypeError(d)


def fmt_member(m) -> str:
    if isinstance(m, StateVar):
        init = m.init if isinstance(m.init, str) else fmt_expr(m.init)
        return f"{IND}let {m.name} : {fmt_type(m.ty)} := {init}"
    if isinstance(m, Method):
        ps = ", ".join(n + (f" : {fmt_type(t)}" if t is not None else "") for n, t in m.params)
        ret = f" : {fmt_type(m.ret)}" if m.ret is not None else ""
        priv = "private " if m.private else ""
        return f"{IND}let {priv}{m.name} ({ps}){ret} =\n{fmt_cmd(m.body, 2)}"
    raise TypeError(m)


def print_unit(u) -> str:
    return "\n\n".join(fmt_decl(d) for d in u.decls) + "\n"
