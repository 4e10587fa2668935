"""Random well-typed contracts and transaction sequences for differential testing."""
from __future__ import annotations

import random

from ..frontend import syntax as S
from ..frontend.printer import print_unit
from .differential import DEFAULT_SENDERS, TxSpec, ValidationReport, differential_run

ARITH = ("+", "-", "*", "/", "%", "&", "|", "^")
CMP = ("=", "<>", "<", "<=", ">", ">=")
INT = S.TyName("int")
BIG = (2 ** 256 - 1, 2 ** 255, 2 ** 128 + 7, 10 ** 30)


class ProgramGen:
    """Builds a source tree; every function and loop uses fresh names."""

    def __init__(self, rng: random.Random, max_depth: int = 2):
        self.rng = rng
        self.max_depth = max_depth
        self.fresh = 0

    def name(self, prefix: str) -> str:
        self.fresh += 1
        return f"{prefix}{self.fresh}"

    # ------------------------------------------------------------ expressions
    def int_expr(self, scope, depth=0):
        r = self.rng.random()
        if depth >= self.max_depth or r < 0.3:
            return self.leaf(scope)
        if r < 0.75:
            return S.BinOp(self.rng.choice(ARITH), self.int_expr(scope, depth + 1),
                           self.int_expr(scope, depth + 1))
        if r < 0.9:
            return S.IndexE(S.Var(self.rng.choice(self.maps)), self.int_expr(scope, depth + 1))
        return S.IndexE(S.IndexE(S.Var("nested"), self.int_expr(scope, depth + 1)),
                        self.leaf(scope))

    def leaf(self, scope):
        r = self.rng.random()
        if scope and r < 0.45:
            return S.Var(self.rng.choice(scope))
        if r < 0.65:
            return S.Var(self.rng.choice(self.ints))
        if r < 0.72:
            return S.Var(self.rng.choice(("msg_sender", "block_number", "msg_value")))
        if r < 0.76:
            return S.Num(self.rng.choice(BIG))
        return S.Num(self.rng.randrange(12))

    def bool_expr(self, scope, depth=0):
        r = self.rng.random()
        if depth < 1 and r < 0.25:
            return S.BinOp(self.rng.choice(("/\\", "\\/")), self.bool_expr(scope, depth + 1),
                           self.bool_expr(scope, depth + 1))
        if r < 0.3:
            return S.UnOp("!", self.bool_expr(scope, depth + 1))
        if r < 0.33:
            return S.BoolLit(self.rng.random() < 0.5)
        return S.BinOp(self.rng.choice(CMP), self.int_expr(scope, 1), self.int_expr(scope, 1))

    # --------------------------------------------------------------- commands
    def target(self, scope):
        if self.rng.random() < 0.5:
            return S.Var(self.rng.choice(self.ints))
        if self.rng.random() < 0.8:
            return S.IndexE(S.Var(self.rng.choice(self.maps)), self.int_expr(scope, 1))
        return S.IndexE(S.IndexE(S.Var("nested"), self.leaf(scope)), self.leaf(scope))

    def assign(self, scope):
        return S.Assign(self.target(scope), self.int_expr(scope))

    def block(self, n, scope, final, depth, helpers=()):
        if n <= 0:
            return final(scope)
        r = self.rng.random()
        if r < 0.3:
            v = self.name("v")
            if helpers and self.rng.random() < 0.35:
                h = self.rng.choice(helpers)
                value = S.ExprCmd(S.CallE(h[0], tuple(self.int_expr(scope, 1) for _ in range(h[1]))))
            else:
                value = S.ExprCmd(self.int_expr(scope))
            return S.Let(v, value, self.block(n - 1, scope + [v], final, depth, helpers))
        return S.Seq(self.stmt(scope, depth, helpers), self.block(n - 1, scope, final, depth, helpers))

    def stmt(self, scope, depth, helpers):
        r = self.rng.random()
        if depth < 2 and r < 0.2:
            then = self.block(self.rng.randrange(1, 3), scope, self.assign, depth + 1, helpers)
            orelse = None
            if self.rng.random() < 0.6:
                orelse = self.block(self.rng.randrange(1, 3), scope, self.assign, depth + 1, helpers)
            return S.If(self.bool_expr(scope), then, orelse)
        if depth < 2 and r < 0.3:
            i = self.name("i")
            hi = S.Num(self.rng.randrange(4)) if self.rng.random() < 0.8 else S.BinOp(
                "%", self.int_expr(scope, 1), S.Num(4))
            body = self.block(self.rng.randrange(1, 3), scope + [i], self.assign, depth + 1, helpers)
            return S.For(i, S.Num(self.rng.randrange(2)), hi, body)
        if r < 0.38:
            return S.Assert(self.bool_expr(scope))
        if r < 0.46:
            return S.Emit("Ev", (self.int_expr(scope, 1), self.int_expr(scope, 1)))
        if r < 0.48 and depth > 0:
            return S.Revert()
        return self.assign(scope)

    # ----------------------------------------------------------------- program
    def unit(self, nmethods: int | None = None) -> S.SourceUnit:
        rng = self.rng
        self.ints = [f"g{i}" for i in range(rng.randrange(1, 4))]
        self.maps = [f"m{i}" for i in range(rng.randrange(1, 3))]
        members = [S.StateVar(g, INT, S.Num(rng.choice((0, 0, 1, 7, 100)))) for g in self.ints]
        members += [S.StateVar(m, S.TyMapping(INT, INT), "mapping_init") for m in self.maps]
        members.append(S.StateVar("nested", S.TyMapping(INT, S.TyMapping(INT, INT)), "mapping_init"))

        ctor_body = self.assign([])
        for _ in range(rng.randrange(0, 2)):
            ctor_body = S.Seq(self.assign([]), ctor_body)
        members.append(S.Method("constructor", (), None, ctor_body))
        entries = [S.SigEntry("constructor", (), S.TyName("unit"))]

        helpers = []
        for _ in range(rng.randrange(0, 3)):
            name = self.name("h")
            params = tuple((self.name("a"), INT) for _ in range(rng.randrange(1, 3)))
            scope = [p for p, _ in params]
            body = self.block(rng.randrange(0, 3), scope, lambda sc: S.ExprCmd(self.int_expr(sc)),
                              1, tuple(helpers))
            members.append(S.Method(name, params, INT, body, private=True))
            helpers.append((name, len(params)))

        for k in range(nmethods or rng.randrange(2, 5)):
            name = f"f{k}"
            params = tuple((self.name("p"), None) for _ in range(rng.randrange(0, 4)))
            scope = [p for p, _ in params]
            body = self.block(rng.randrange(1, 5), scope, lambda sc: S.ExprCmd(self.int_expr(sc)),
                              0, tuple(helpers))
            members.append(S.Method(name, params, None, body))
            entries.append(S.SigEntry(name, tuple(INT for _ in params), INT))

        return S.SourceUnit((
            S.EventDecl("Ev", ((INT, True), (INT, False))),
            S.Signature("FuzzInterface", tuple(entries)),
            S.ObjectDecl("Fuzz", "FuzzInterface", tuple(members)),
            S.LayerDecl("FUZZ", (), "FuzzInterface", (("fuzz", "Fuzz"),)),
        ))


def random_program(rng: random.Random) -> S.SourceUnit:
    return ProgramGen(rng).unit()


def random_source(rng: random.Random) -> str:
    return print_unit(random_program(rng))


def random_txs(rng: random.Random, methods: dict, n: int) -> list:
    """``methods`` maps method names to arity; a deployment comes first."""
    txs = [TxSpec("constructor", (), DEFAULT_SENDERS[0], block=1)]
    names = sorted(methods)
    block = 1
    for _ in range(n):
        m = rng.choice(names)
        block += rng.randrange(3)
        args = tuple(rng.choice((0, 1, 2, 3, 5, 7, 2 ** 256 - 1, rng.getrandbits(64)))
                     for _ in range(methods[m]))
        value = rng.choice((0, 0, 0, 1, 1000))
        txs.append(TxSpec(m, args, rng.choice(DEFAULT_SENDERS), value, block))
    return txs


def method_arities(art) -> dict:
    from ..core.ast import FunctionKind
    return {f.name: len(f.params) for f in art.minic.functions.values()
            if f.kind == FunctionKind.METHOD}


def fuzz_campaign(count: int, seed: int, txs_per_program: int = 7, optimize: bool = True,
                  rules=None, phases=None) -> ValidationReport:
    """Generate ``count`` programs from ``seed`` and run each through the differential harness.

    Divergences are tagged with the program index so a failure can be replayed
    from the seed alone.
    """
    from ..pipeline.driver import IR_PHASES, compile_program
    rng = random.Random(seed)
    rep = ValidationReport()
    for k in range(count):
        src = random_source(rng)
        art = compile_program(src, optimize=optimize, rules=rules)
        txs = random_txs(rng, method_arities(art), txs_per_program)
        one = differential_run(art, txs, phases or IR_PHASES)
        for d in one.divergences:
            d.program = k
        rep.merge(one)
    return rep
