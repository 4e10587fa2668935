"""Hand-written lexer and recursive-descent parser for ``.ds`` sources.

The grammar is documented in docs/grammar.md.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import SourceSyntaxError
from .syntax import (Assert, Assign, BinOp, BoolLit, CallE, Emit, EventDecl, ExprCmd,
                     FieldE, For, If, IndexE, LayerDecl, Let, Method, Num, ObjectDecl,
                     Revert, Seq, SigEntry, Signature, SourceUnit, StateVar, TransferEth,
                     TyArray, TyMapping, TyName, TypeDecl, UnitLit, UnOp, Var)

KEYWORDS = {
    "object", "signature", "layer", "let", "in", "if", "then", "else", "begin", "end",
    "for", "to", "do", "done", "assert", "revert", "emit", "type", "event", "mapping",
    "array", "const", "private", "true", "false", "mapping_init", "array_init",
    "struct_init", "transferEth", "indexed",
}

SYMBOLS = [":=", "<>", "<=", ">=", "->", "/\\", "\\/", "=", "<", ">", "+", "-", "*", "/",
           "%", "!", "~", "&", "|", "^", "(", ")", "[", "]", "{", "}", ",", ";", ":", "."]

# binary operator levels, loosest first; comparisons do not associate
LEVELS = [
    ("\\/",),
    ("/\\",),
    ("=", "<>", "<", "<=", ">", ">="),
    ("|", "^"),
    ("&",),
    ("+", "-"),
    ("*", "/", "%"),
]
NONASSOC = 2
PRECEDENCE = {op: i for i, ops in enumerate(LEVELS) for op in ops}

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")
_NUMBER = re.compile(r"0[xX][0-9a-fA-F_]+|[0-9][0-9_]*")


@dataclass(frozen=True)
class Token:
    kind: str       # IDENT, INT, KW, SYM, EOF
    text: str
    line: int
    col: int
    value: int = 0


def tokenize(text: str) -> list:
    toks = []
    i, line, col = 0, 1, 1
    n = len(text)

    def advance(k):
        nonlocal i, line, col
        for ch in text[i:i + k]:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
        i += k

    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            advance(1)
            continue
        if text.startswith("(*", i):
            depth, sl, sc = 0, line, col
            while True:
                if i >= n:
                    raise SourceSyntaxError("unterminated comment", sl, sc)
                if text.startswith("(*", i):
                    depth += 1
                    advance(2)
                elif text.startswith("*)", i):
                    depth -= 1
                    advance(2)
                    if depth == 0:
                        break
                else:
                    advance(1)
            continue
        if text.startswith("//", i):
            j = text.find("\n", i)
            advance((n if j < 0 else j) - i)
            continue
        m = _NUMBER.match(text, i)
        if m:
            raw = m.group(0).replace("_", "")
            toks.append(Token("INT", m.group(0), line, col, int(raw, 0)))
            advance(len(m.group(0)))
            continue
        m = _IDENT.match(text, i)
        if m:
            word = m.group(0)
            toks.append(Token("KW" if word in KEYWORDS else "IDENT", word, line, col))
            advance(len(word))
            continue
        for sym in SYMBOLS:
            if text.startswith(sym, i):
                toks.append(Token("SYM", sym, line, col))
                advance(len(sym))
                break
        else:
            raise SourceSyntaxError(f"unexpected character {ch!r}", line, col)
    toks.append(Token("EOF", "", line, col))
    return toks


CLOSERS = {"end", "done", "in", "}", ")", ""}


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.pos = 0

    # ---------------------------------------------------------------- helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k=1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def at(self, text, kind=None) -> bool:
        t = self.tok
        return t.text == text and (kind is None or t.kind == kind) and t.kind != "IDENT"

    def error(self, msg, tok=None):
        tok = tok or self.tok
        found = tok.text or "end of input"
        raise SourceSyntaxError(f"{msg} (found {found!r})", tok.line, tok.col)

    def expect(self, text) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}")
        t = self.tok
        self.pos += 1
        return t

    def accept(self, text) -> bool:
        if self.at(text):
            self.pos += 1
            return True
        return False

    def ident(self) -> str:
        t = self.tok
        if t.kind != "IDENT":
            self.error("expected identifier")
        self.pos += 1
        return t.text

    def integer(self) -> int:
        t = self.tok
        if t.kind != "INT":
            self.error("expected integer literal")
        self.pos += 1
        return t.value

    # ----------------------------------------------------------- declarations
    def parse_unit(self) -> SourceUnit:
        decls = []
        while self.tok.kind != "EOF":
            decls.append(self.decl())
        return SourceUnit(tuple(decls))

    def decl(self):
        if self.accept("type"):
            name = self.ident()
            self.expect("=")
            self.expect("{")
            fields = []
            while not self.at("}"):
                f = self.ident()
                self.expect(":")
                fields.append((f, self.type_()))
                if not self.accept(";"):
                    break
            self.expect("}")
            return TypeDecl(name, tuple(fields))
        if self.accept("event"):
            name = self.ident()
            self.expect("(")
            params = []
            if not self.at(")"):
                while True:
                    indexed = self.accept("indexed")
                    params.append((self.type_(), indexed))
                    if not self.accept(","):
                        break
            self.expect(")")
            return EventDecl(name, tuple(params))
        if self.accept("object"):
            if self.accept("signature"):
                return self.signature()
            return self.object_()
        if self.accept("layer"):
            return self.layer()
        self.error("expected a declaration")

    def signature(self) -> Signature:
        name = self.ident()
        self.expect("=")
        self.expect("{")
        entries = []
        while not self.at("}"):
            const = self.accept("const")
            m = self.ident()
            self.expect(":")
            args = [self.type_()]
            while self.accept("*"):
                args.append(self.type_())
            self.expect("->")
            ret = self.type_()
            if len(args) == 1 and args[0] == TyName("unit"):
                args = []
            entries.append(SigEntry(m, tuple(args), ret, const))
            if not self.accept(";"):
                break
        self.expect("}")
        return Signature(name, tuple(entries))

    def object_(self) -> ObjectDecl:
        name = self.ident()
        sig = self.ident() if self.accept(":") else None
        self.expect("{")
        members = []
        while not self.at("}"):
            members.append(self.member())
        self.expect("}")
        return ObjectDecl(name, sig, tuple(members))

    def member(self):
        self.expect("let")
        private = self.accept("private")
        name = self.ident()
        if self.accept(":"):
            if private:
                self.error("state variables cannot be private")
            ty = self.type_()
            self.expect(":=")
            if self.tok.text in ("mapping_init", "array_init", "struct_init") and self.tok.kind == "KW":
                init = self.tok.text
                self.pos += 1
            else:
                init = self.expr()
            return StateVar(name, ty, init)
        params = []
        if self.accept("("):
            if not self.at(")"):
                while True:
                    params.append(self.param())
                    if not self.accept(","):
                        break
            self.expect(")")
        else:
            while self.tok.kind == "IDENT":
                params.append((self.ident(), None))
            if not params:
                self.error("expected parameters")
        ret = self.type_() if self.accept(":") else None
        self.expect("=")
        body = self.cmd()
        return Method(name, tuple(params), ret, body, private)

    def param(self):
        n = self.ident()
        ty = self.type_() if self.accept(":") else None
        return (n, ty)

    def layer(self) -> LayerDecl:
        name = self.ident()
        self.expect(":")
        self.expect("[")
        under = []
        if self.accept("{"):
            while not self.at("}"):
                under.append(self.ident())
                if self.accept(":"):
                    self.ident()
                if not self.accept(";"):
                    break
            self.expect("}")
        else:
            while self.tok.kind == "IDENT":
                under.append(self.ident())
        self.expect("]")
        sig = self.ident()
        self.expect("=")
        self.expect("{")
        binds = []
        while not self.at("}"):
            f = self.ident()
            self.expect("=")
            binds.append((f, self.ident()))
            if not self.accept(";"):
                break
        self.expect("}")
        return LayerDecl(name, tuple(under), sig, tuple(binds))

    def type_(self):
        if self.accept("mapping"):
            self.expect("[")
            k = self.type_()
            self.expect("]")
            return TyMapping(k, self.type_())
        if self.accept("array"):
            self.expect("[")
            n = self.integer()
            self.expect("]")
            return TyArray(n, self.type_())
        return TyName(self.ident())

    # --------------------------------------------------------------- commands
    def cmd(self):
        first = self.simple()
        if self.accept(";"):
            if self.tok.text in CLOSERS and self.tok.kind != "IDENT":
                return first
            return Seq(first, self.cmd())
        return first

    def simple(self):
        t = self.tok
        if t.kind == "KW":
            k = t.text
            if k == "let":
                self.pos += 1
                name = self.ident()
                self.expect("=")
                value = self.simple()
                self.expect("in")
                return Let(name, value, self.cmd())
            if k == "if":
                self.pos += 1
                cond = self.expr()
                self.expect("then")
                then = self.simple()
                orelse = self.simple() if self.accept("else") else None
                return If(cond, then, orelse)
            if k == "for":
                self.pos += 1
                var = self.ident()
                self.expect("=")
                lo = self.expr()
                self.expect("to")
                hi = self.expr()
                self.expect("do")
                body = self.cmd()
                self.expect("done")
                return For(var, lo, hi, body)
            if k == "assert":
                self.pos += 1
                self.expect("(")
                e = self.expr()
                self.expect(")")
                return Assert(e)
            if k == "revert":
                self.pos += 1
                return Revert()
            if k == "emit":
                self.pos += 1
                name = self.ident()
                return Emit(name, self.args())
            if k == "transferEth":
                self.pos += 1
                self.expect("(")
                to = self.expr()
                self.expect(",")
                amt = self.expr()
                self.expect(")")
                return TransferEth(to, amt)
            if k == "begin":
                self.pos += 1
                c = self.cmd()
                self.expect("end")
                return c
        e = self.expr()
        if self.accept(":="):
            return Assign(e, self.expr())
        return ExprCmd(e)

    def args(self) -> tuple:
        self.expect("(")
        out = []
        if not self.at(")"):
            while True:
                out.append(self.expr())
                if not self.accept(","):
                    break
        self.expect(")")
        return tuple(out)

    # ------------------------------------------------------------ expressions
    def expr(self, level=0):
        if level == len(LEVELS):
            return self.unary()
        left = self.expr(level + 1)
        ops = LEVELS[level]
        while self.tok.kind == "SYM" and self.tok.text in ops:
            op = self.tok.text
            self.pos += 1
            right = self.expr(level + 1)
            left = BinOp(op, left, right)
            if level == NONASSOC:
                if self.tok.kind == "SYM" and self.tok.text in ops:
                    self.error("comparison operators do not associate")
                break
        return left

    def unary(self):
        if self.tok.kind == "SYM" and self.tok.text in ("!", "~"):
            op = self.tok.text
            self.pos += 1
            return UnOp(op, self.unary())
        return self.postfix()

    def postfix(self):
        e = self.atom()
        while True:
            if self.accept("["):
                idx = self.expr()
                self.expect("]")
                e = IndexE(e, idx)
            elif self.accept("."):
                e = FieldE(e, self.ident())
            else:
                return e

    def atom(self):
        t = self.tok
        if t.kind == "INT":
            self.pos += 1
            return Num(t.value)
        if t.kind == "KW" and t.text in ("true", "false"):
            self.pos += 1
            return BoolLit(t.text == "true")
        if t.kind == "IDENT":
            self.pos += 1
            if self.at("("):
                return CallE(t.text, self.args())
            return Var(t.text)
        if self.accept("("):
            if self.accept(")"):
                return UnitLit()
            e = self.expr()
            self.expect(")")
            return e
        self.error("expected an expression")


def parse(text: str) -> SourceUnit:
    return Parser(text).parse_unit()


def parse_cmd(text: str):
    p = Parser(text)
    c = p.cmd()
    if p.tok.kind != "EOF":
        p.error("trailing input")
    return c


def parse_expr(text: str):
    p = Parser(text)
    e = p.expr()
    if p.tok.kind != "EOF":
        p.error("trailing input")
    return e
