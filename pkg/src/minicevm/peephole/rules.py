"""Rewrite-rule syntax.

One rule per line, ``LHS => RHS``; ``#`` starts a comment. A side is a
space-separated instruction sequence. Immediates and DUP/SWAP depths may be
variables (``PUSH $a``, ``DUP$n``), and a right-hand PUSH may compute its
immediate from the bound variables: ``PUSH {a + b}``. Expressions use
word arithmetic: results wrap modulo 2^256 and division by zero gives 0.
"""
from __future__ import annotations

import ast
import re
from dataclasses import dataclass
from importlib import resources

from ..errors import RuleParseError

MASK = (1 << 256) - 1
BINARY = {"ADD", "SUB", "MUL", "DIV", "MOD", "LT", "GT", "EQ", "AND", "OR", "XOR"}
UNARY = {"ISZERO", "NOT"}
COMMUTATIVE = {"ADD", "MUL", "EQ", "AND", "OR", "XOR"}
OPS = BINARY | UNARY | {"POP"}


@dataclass(frozen=True)
class Tok:
    """``kind`` is PUSH, DUP, SWAP or an opcode name; ``arg`` an int, a
    variable name, or (for right-hand PUSH) an expression term."""
    kind: str
    arg: object = None

    def __str__(self):
        if self.kind == "PUSH":
            a = self.arg
            if isinstance(a, str):
                return f"PUSH ${a}"
            if isinstance(a, tuple):
                return f"PUSH {{{fmt_term(a)}}}"
            return f"PUSH {a}"
        if self.kind in ("DUP", "SWAP"):
            return f"{self.kind}{'$' + self.arg if isinstance(self.arg, str) else self.arg}"
        return self.kind


@dataclass(frozen=True)
class Rule:
    lhs: tuple
    rhs: tuple
    text: str = ""

    @property
    def name(self):
        return self.text or f"{' '.join(map(str, self.lhs))} => {' '.join(map(str, self.rhs))}"

    def variables(self) -> set:
        return {t.arg for t in self.lhs if isinstance(t.arg, str)}


# ------------------------------------------------------------------- terms
# A term is ("c", n) | ("v", name) | ("x", i) | (OPNAME, arg0, arg1?) with
# arguments in pop order: SUB(a, b) is a - b where a was on top.

def word_op(name: str, a: int, b: int = 0) -> int:
    if name == "ADD":
        return (a + b) & MASK
    if name == "SUB":
        return (a - b) & MASK
    if name == "MUL":
        return (a * b) & MASK
    if name == "DIV":
        return a // b if b else 0
    if name == "MOD":
        return a % b if b else 0
    if name == "LT":
        return int(a < b)
    if name == "GT":
        return int(a > b)
    if name == "EQ":
        return int(a == b)
    if name == "AND":
        return a & b
    if name == "OR":
        return a | b
    if name == "XOR":
        return a ^ b
    if name == "ISZERO":
        return int(a == 0)
    if name == "NOT":
        return MASK ^ a
    raise RuleParseError(f"unknown operation {name}")


def eval_term(t, env: dict) -> int:
    tag = t[0]
    if tag == "c":
        return t[1]
    if tag == "v":
        return env[t[1]]
    return word_op(tag, *(eval_term(a, env) for a in t[1:]))


def fmt_term(t) -> str:
    tag = t[0]
    if tag == "c":
        return str(t[1])
    if tag in ("v", "x"):
        return f"{t[1]}" if tag == "v" else f"x{t[1]}"
    return f"{tag}({', '.join(fmt_term(a) for a in t[1:])})"


_PYOPS = {ast.Add: "ADD", ast.Sub: "SUB", ast.Mult: "MUL", ast.FloorDiv: "DIV", ast.Div: "DIV",
          ast.Mod: "MOD", ast.BitAnd: "AND", ast.BitOr: "OR", ast.BitXor: "XOR"}
_PYCMP = {ast.Eq: "EQ", ast.Lt: "LT", ast.Gt: "GT"}


def _to_term(node):
    if isinstance(node, ast.Expression):
        return _to_term(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, int):
        return ("c", node.value & MASK)
    if isinstance(node, ast.Name):
        return ("v", node.id)
    if isinstance(node, ast.BinOp) and type(node.op) in _PYOPS:
        return (_PYOPS[type(node.op)], _to_term(node.left), _to_term(node.right))
    if isinstance(node, ast.Compare) and len(node.ops) == 1 and type(node.ops[0]) in _PYCMP:
        return (_PYCMP[type(node.ops[0])], _to_term(node.left), _to_term(node.comparators[0]))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.Not):
        return ("ISZERO", _to_term(node.operand))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.Invert):
        return ("NOT", _to_term(node.operand))
    raise RuleParseError(f"unsupported expression element {ast.dump(node)}")


def parse_expr(text: str):
    try:
        return _to_term(ast.parse(text, mode="eval"))
    except SyntaxError as e:
        raise RuleParseError(f"bad expression {{{text}}}: {e.msg}") from None


# ----------------------------------------------------------------- parsing

_TOKEN = re.compile(r"\{[^}]*\}|\S+")
_NUM = re.compile(r"0x[0-9a-fA-F]+|\d+")
_VAR = re.compile(r"\$([A-Za-z_]\w*)")


def _imm(word: str, allow_expr: bool):
    if _NUM.fullmatch(word):
        return int(word, 0)
    m = _VAR.fullmatch(word)
    if m:
        return m.group(1)
    if word.startswith("{") and allow_expr:
        return parse_expr(word[1:-1].strip())
    raise RuleParseError(f"bad immediate {word!r}")


def parse_side(text: str, rhs: bool) -> tuple:
    words = _TOKEN.findall(text)
    out = []
    i = 0
    while i < len(words):
        w = words[i]
        up = w.upper()
        if up == "PUSH" or re.fullmatch(r"PUSH\d+", up):
            if i + 1 >= len(words):
                raise RuleParseError("PUSH needs an immediate")
            out.append(Tok("PUSH", _imm(words[i + 1], rhs)))
            i += 2
            continue
        m = re.fullmatch(r"(DUP|SWAP)(\d+|\$[A-Za-z_]\w*)", w, re.IGNORECASE)
        if m:
            kind = m.group(1).upper()
            arg = _imm(m.group(2), False)
            if isinstance(arg, int) and not 1 <= arg <= 16:
                raise RuleParseError(f"{kind}{arg} is not an instruction")
            out.append(Tok(kind, arg))
        elif up in OPS:
            out.append(Tok(up))
        else:
            raise RuleParseError(f"unknown instruction {w!r}")
        i += 1
    return tuple(out)


def parse_rule(line: str) -> Rule:
    if "=>" not in line:
        raise RuleParseError(f"missing '=>' in {line!r}")
    left, right = line.split("=>", 1)
    lhs = parse_side(left, False)
    if not lhs:
        raise RuleParseError("empty left-hand side")
    rhs = parse_side(right, True)
    bound = {t.arg for t in lhs if isinstance(t.arg, str)}
    for t in rhs:
        names = set()
        if isinstance(t.arg, str):
            names.add(t.arg)
        elif isinstance(t.arg, tuple):
            _names(t.arg, names)
        if names - bound:
            raise RuleParseError(f"unbound variable(s) {sorted(names - bound)} in {line.strip()!r}")
    return Rule(lhs, rhs, " ".join(line.split()))


def _names(term, out):
    if term[0] == "v":
        out.add(term[1])
    elif term[0] not in ("c", "x"):
        for a in term[1:]:
            _names(a, out)


def parse_rules(text: str) -> list:
    rules = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            rules.append(parse_rule(line))
        except RuleParseError as e:
            raise RuleParseError(f"line {n}: {e}") from None
    return rules


def read_rules(path=None) -> list:
    """Parse a rule file (the bundled one by default) without checking it."""
    if path is None:
        text = resources.files("minicevm.data").joinpath("default.rules").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    return parse_rules(text)
