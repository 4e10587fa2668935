import pytest
from hypothesis import given, settings, strategies as st

from minicevm.core.values import Label, Vint
from minicevm.errors import RuleParseError, RuleUnsound
from minicevm.evm.backend import image
from minicevm.evm.interp import InstructionContinue, VariableCtx, instruction_sem
from minicevm.peephole import (OptReport, check_rule, load_rules, optimize, parse_rule, parse_rules,
                               read_rules)
from minicevm.peephole.check import _CTX, run_concrete
from minicevm.pipeline.expressionless import (Xbinop, Xdup, Xjump, Xlabel, Xpop, Xpush, Xsload,
                                              Xswap, Xunop)

RULES = load_rules()


def P(n):
    return Xpush(Vint(n))


@pytest.mark.derived
def test_add_to_mul_is_unsound():
    res = check_rule(parse_rule("ADD => MUL"))
    assert not res.sound and res.counterexample
    add, mul = (run_concrete(image(Xbinop(o)), [2, 3]) for o in ("add", "mul"))
    assert add == [5] and mul == [6]


@pytest.mark.derived
def test_swap_sub_is_unsound():
    assert not check_rule(parse_rule("SWAP1 SUB => SUB")).sound


@pytest.mark.derived
def test_dup_swap_saves_three_gas():
    res = check_rule(parse_rule("DUP1 SWAP1 => DUP1"))
    assert res.ok and res.proven
    assert res.gas_lhs - res.gas_rhs == 3


@pytest.mark.derived
def test_rule_reaching_deeper_is_rejected():
    res = check_rule(parse_rule("POP => DUP2 POP POP"))
    assert not res.sound


@pytest.mark.trivial
def test_not_cheaper_rule_fails_the_load(tmp_path):
    f = tmp_path / "r.rules"
    f.write_text("SWAP1 SWAP1 => SWAP2 SWAP2\n")
    with pytest.raises(RuleUnsound):
        load_rules(f)


@pytest.mark.trivial
def test_empty_rule_file(tmp_path):
    f = tmp_path / "empty.rules"
    f.write_text("# nothing here\n\n")
    assert read_rules(f) == []
    code = [P(1), P(0), Xbinop("add")]
    assert optimize(code, []) == code


@pytest.mark.trivial
@pytest.mark.parametrize("line", ["ADD MUL", "=> ADD", "PUSH => POP", "DUP17 => DUP1",
                                  "FOO => ", "POP => PUSH $a"])
def test_malformed_rules(line):
    with pytest.raises(RuleParseError):
        parse_rules(line)


@pytest.mark.trivial
def test_empty_code():
    assert optimize([], RULES) == []


@pytest.mark.trivial
def test_no_match_leaves_code_alone():
    code = [Xlabel(Label("f", "x")), Xsload(), Xpush(Label("f", "x")), Xjump()]
    assert optimize(code, RULES) == code


@pytest.mark.derived
def test_rewrites_cascade():
    rep = OptReport()
    out = optimize([P(0), Xbinop("add"), Xdup(1), Xswap(1)], RULES, rep, "f")
    assert out == [Xdup(1)]
    assert rep.total == 2 and rep.per_function == {"f": 2}
    assert rep.to_json()["version"] == 1


@pytest.mark.derived
def test_constant_folding_respects_code_size():
    # 2^255 - 6 = 0x7f..fa: the fold would trade 31 zero bytes for nonzero ones
    code = [P(6), Xpush(Vint(1 << 255)), Xbinop("sub")]
    assert optimize(code, RULES) == code
    # 6 - 2^255 = 0x80..06 keeps its zeros and drops two pushes
    assert optimize(code[1::-1] + code[2:], RULES) == [Xpush(Vint((1 << 255) + 6))]
    assert optimize([P(2), P(3), Xbinop("add")], RULES) == [P(5)]


@pytest.mark.trivial
def test_barriers_split_windows():
    code = [P(0), Xlabel(Label("f", "l")), Xbinop("add")]
    assert optimize(code, RULES) == code


# ----------------------------------------------------------- properties

DEPTH = 20


@st.composite
def straight_line(draw):
    """Stack code that never underflows a stack of DEPTH items."""
    h, code = DEPTH, []
    for _ in range(draw(st.integers(0, 25))):
        kind = draw(st.sampled_from(["push", "push", "dup", "swap", "pop", "un", "bin", "bin"]))
        if kind == "push":
            code.append(P(draw(st.sampled_from([0, 1, 2, 7, 2 ** 255, 2 ** 256 - 1]))))
            h += 1
        elif kind == "dup" and h < 1000:
            code.append(Xdup(draw(st.integers(1, min(16, h)))))
            h += 1
        elif kind == "swap" and h > 1:
            code.append(Xswap(draw(st.integers(1, min(16, h - 1)))))
        elif kind == "pop" and h > DEPTH // 2:
            code.append(Xpop())
            h -= 1
        elif kind == "un":
            code.append(Xunop(draw(st.sampled_from(["not", "bitnot"]))))
        elif kind == "bin" and h > DEPTH // 2:
            code.append(Xbinop(draw(st.sampled_from(["add", "sub", "mul", "div", "and", "or",
                                                     "xor", "eq", "lt", "gt"]))))
            h -= 1
    return code


def execute(code, stack):
    v = VariableCtx(stack=list(stack), gas=10 ** 9)
    for s in code:
        for i in image(s):
            r = instruction_sem(_CTX, v, i)
            assert type(r) is InstructionContinue
            v = r.v
    return v.stack, 10 ** 9 - v.gas


@pytest.mark.derived
@settings(max_examples=300, deadline=None)
@given(straight_line(), st.lists(st.integers(0, 2 ** 256 - 1), min_size=DEPTH, max_size=DEPTH))
def test_optimize_preserves_semantics_and_never_costs_more(code, stack):
    rep = OptReport()
    out = optimize(code, RULES, rep)
    before, g0 = execute(code, stack)
    after, g1 = execute(out, stack)
    assert after == before
    assert g1 <= g0
    assert g0 - g1 == rep.gas_saved
    assert optimize(out, RULES) == out
