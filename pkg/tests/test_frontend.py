import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from helpers import contract
from minicevm.core.types import TINT, Thashmap
from minicevm.errors import (CallInConstructor, SourceSyntaxError, SourceTypeError,
                             UnsupportedFeature)
from minicevm.examples import NAMES, source
from minicevm.frontend.parser import parse, parse_expr
from minicevm.frontend.printer import fmt_expr, print_unit
from minicevm.frontend.syntax import BinOp, Num, UnOp, Var
from minicevm.frontend.typecheck import typecheck
from minicevm.frontend.vcs import emit_vcs, vcs_jsonl
from minicevm.pipeline.driver import frontend
from minicevm.validation.fuzz import random_program


@pytest.mark.paper
def test_token_parses_with_its_methods():
    u = parse(source("token"))
    names = {m.name for m in u.objects[0].methods}
    assert {"constructor", "balanceOf", "transfer", "approve", "transferFrom"} <= names


@pytest.mark.trivial
def test_empty_object_body_has_no_methods():
    u = parse("object signature S = {\n}\n\nobject O : S {\n}\n")
    assert u.objects[0].methods == []


@pytest.mark.parametrize("text", ["object O {", "object signature S = { f : int -> int;",
                                  contract("  let f (x) =\n    (x + 1", "  f : int -> int;")])
@pytest.mark.trivial
def test_unbalanced_delimiters_are_syntax_errors(text):
    with pytest.raises(SourceSyntaxError):
        parse(text)


@pytest.mark.trivial
def test_syntax_error_reports_position():
    with pytest.raises(SourceSyntaxError) as ei:
        parse("object {")
    assert ei.value.line == 1 and ei.value.col > 0


@pytest.mark.paper
def test_mapping_types():
    p = frontend(source("token"))
    g = dict(p.globals)
    assert g["balances"] == Thashmap(TINT, TINT)
    assert g["allowances"] == Thashmap(TINT, Thashmap(TINT, TINT))


@pytest.mark.parametrize("body,sig", [
    ("  let g : int := 0\n  let f (x) =\n    g := ()", "  f : int -> unit;"),
    ("  let g : int := 0\n  let f (x) =\n    g := true", "  f : int -> unit;"),
    ("  let f (x) =\n    y + 1", "  f : int -> int;"),
    ("  let f (x, y) =\n    x", "  f : int -> int;"),
    ("  let g : int := 0", "  f : int -> int;"),
])
@pytest.mark.trivial
def test_type_errors(body, sig):
    with pytest.raises(SourceTypeError):
        frontend(contract(body, sig))


@pytest.mark.trivial
def test_constructor_may_not_call():
    body = "  let private h (x) =\n    x\n  let constructor () =\n    h(1);\n    ()"
    with pytest.raises(CallInConstructor):
        frontend(contract(body, "  constructor : unit -> unit;"))


@pytest.mark.trivial
def test_layers_with_underlay_are_unsupported():
    src = source("token").replace("layer TOKEN : [{}]", "layer TOKEN : [{BASE}]")
    with pytest.raises(UnsupportedFeature):
        frontend(src)


@pytest.mark.derived
@pytest.mark.parametrize("n,total", [(10, 45), (1, 0), (0, 0), (2, 1)])
def test_for_loop_upper_bound_is_exclusive(n, total):
    body = ("  let s : int := 0\n  let f (n) =\n    for i = 1 to n do\n      s := s + i\n"
            "    done;\n    s")
    from minicevm.reference import run_method
    from minicevm.core.machine import MachineEnv
    p = frontend(contract(body, "  f : int -> int;"))
    r = run_method(p, {}, MachineEnv(1, 2), "f", [n])
    assert r.success and r.value.n == total


# ------------------------------------------------------------------ VCs

@pytest.mark.derived
def test_token_vcs_name_the_transfer_subtraction():
    vcs = emit_vcs(frontend(source("token")))
    preds = {(v.function, v.predicate) for v in vcs}
    assert ("transfer", "0 ≤ from_bal - tokens < 2^256") in preds
    # transfer has one + and one -, transferFrom one + and two -; nothing else computes
    assert sorted(v.function for v in vcs) == ["transfer"] * 2 + ["transferFrom"] * 3
    assert all(v.kind == "RangeCheck" for v in vcs)


@pytest.mark.trivial
def test_no_arithmetic_no_vcs():
    p = frontend(contract("  let g : int := 0\n  let f (x) =\n    g := x", "  f : int -> unit;"))
    assert emit_vcs(p) == []


@pytest.mark.derived
def test_division_yields_nonzero_divisor():
    vcs = emit_vcs(frontend(source("amm")))
    div = [v for v in vcs if v.kind == "NonzeroDivisor"]
    assert [v.predicate for v in div] == ["denominator ≠ 0"]


@pytest.mark.trivial
def test_vcs_jsonl_is_one_object_per_line():
    vcs = emit_vcs(frontend(source("amm")))
    lines = vcs_jsonl(vcs).splitlines()
    assert len(lines) == len(vcs)
    assert {tuple(sorted(json.loads(l))) for l in lines} == {
        ("expression", "function", "kind", "predicate", "stmt_index")}


# ------------------------------------------------------------- printer

@pytest.mark.derived
@pytest.mark.parametrize("name", NAMES)
def test_corpus_print_parse_round_trip(name):
    u = parse(source(name))
    assert parse(print_unit(u)) == u


@pytest.mark.derived
@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_random_programs_round_trip_and_typecheck(seed):
    u = random_program(random.Random(seed))
    text = print_unit(u)
    assert parse(text) == u
    typecheck(u)


leaves = st.one_of(st.integers(0, 1000).map(Num), st.sampled_from(["a", "b", "c"]).map(Var))
exprs = st.recursive(leaves, lambda sub: st.one_of(
    st.builds(BinOp, st.sampled_from(["+", "-", "*", "/", "<", "=", "/\\", "\\/", "<>", "&"]), sub, sub),
    st.builds(UnOp, st.sampled_from(["!", "~"]), sub)), max_leaves=12)


@pytest.mark.derived
@given(exprs)
def test_expression_printer_respects_precedence(e):
    assert parse_expr(fmt_expr(e)) == e
