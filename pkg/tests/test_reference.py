import pytest
from hypothesis import given, settings, strategies as st

from helpers import TOKEN_BALANCES_SLOT, contract
from minicevm.core import ast as A
from minicevm.core.machine import MachineEnv
from minicevm.core.types import TINT, Thashmap
from minicevm.core.memory import Memory, StorageLayout
from minicevm.core.values import Pair, Singleton, Vint
from minicevm.errors import ArityMismatch, UnknownIdent
from minicevm.examples import source
from minicevm.pipeline.driver import frontend
from minicevm.reference import ExecState, eval_expr, run_method

ALICE, BOB, CAROL = 0xA11CE, 0xB0B, 0xCA401
ME = 0xC0DE
TOKEN = frontend(source("token"))


def bal(addr):
    return Pair(Singleton(TOKEN_BALANCES_SLOT), addr)


def call(storage, sender, method, *args, program=TOKEN):
    return run_method(program, storage, MachineEnv(ME, sender), method, list(args))


@pytest.fixture(scope="module")
def deployed():
    r = call({}, ALICE, "constructor")
    assert r.success
    return r.storage


@pytest.mark.paper
def test_constructor_credits_the_deployer(deployed):
    assert deployed == {Singleton(0): Vint(100000), bal(ALICE): Vint(100000)}


@pytest.mark.paper
def test_transfer_moves_tokens(deployed):
    r = call(deployed, ALICE, "transfer", BOB, 400)
    assert r.success and r.value == Vint(1)
    assert r.storage[bal(ALICE)] == Vint(99600)
    assert r.storage[bal(BOB)] == Vint(400)
    assert r.events == [((0xddf252ad1be2c89b69c2b068fc378daa952ba7f163c4a11628f55a4df523b3ef, ALICE, BOB),
                         (400,))]


@pytest.mark.paper
def test_self_transfer_reverts(deployed):
    assert not call(deployed, ALICE, "transfer", ALICE, 1).success


@pytest.mark.trivial
def test_overdraft_reverts_and_keeps_caller_state(deployed):
    before = dict(deployed)
    r = call(deployed, BOB, "transfer", ALICE, 1)
    assert not r.success and r.gas_bound > 0
    assert deployed == before


@pytest.mark.trivial
def test_unknown_method_and_wrong_arity():
    with pytest.raises(UnknownIdent):
        call({}, ALICE, "mint", 1)
    with pytest.raises(ArityMismatch):
        call({}, ALICE, "transfer", 1)


@pytest.mark.derived
def test_transfer_from_uses_allowance(deployed):
    s = call(deployed, ALICE, "approve", BOB, 50).storage
    r = call(s, BOB, "transferFrom", ALICE, CAROL, 30)
    assert r.success
    assert call(r.storage, ALICE, "allowance", ALICE, BOB).value == Vint(20)
    assert call(r.storage, ALICE, "balanceOf", CAROL).value == Vint(30)
    assert not call(r.storage, BOB, "transferFrom", ALICE, CAROL, 21).success


@pytest.mark.trivial
def test_division_by_zero_is_zero():
    p = frontend(contract("  let f (x, y) =\n    x / y", "  f : int * int -> int;"))
    assert call({}, ALICE, "f", 7, 0, program=p).value == Vint(0)
    assert call({}, ALICE, "f", 7, 2, program=p).value == Vint(3)


@pytest.mark.derived
def test_arithmetic_wraps():
    p = frontend(contract("  let f (x, y) =\n    x - y", "  f : int * int -> int;"))
    assert call({}, ALICE, "f", 0, 1, program=p).value == Vint(2 ** 256 - 1)


@pytest.mark.derived
def test_private_call_returns_value():
    body = ("  let private sq (x) =\n    x * x\n"
            "  let f (x) =\n    let a = sq(x) in\n    a + 1")
    p = frontend(contract(body, "  f : int -> int;"))
    assert call({}, ALICE, "f", 9, program=p).value == Vint(82)


# -------------------------------------------------------------- properties

addrs = st.sampled_from([ALICE, BOB, CAROL])
transfers = st.lists(st.tuples(addrs, addrs, st.integers(0, 120000)), max_size=12)


@pytest.mark.derived
@settings(max_examples=40, deadline=None)
@given(transfers)
def test_balance_sum_preserved_and_model_agrees(deployed, txs):
    model = {ALICE: 100000, BOB: 0, CAROL: 0}
    s = deployed
    for frm, to, n in txs:
        r = call(s, frm, "transfer", to, n)
        expect = frm != to and model[frm] >= n
        assert r.success == expect
        if r.success:
            model[frm] -= n
            model[to] += n
            s = r.storage
        assert sum(s.get(bal(a), Vint(0)).n for a in model) == 100000
        assert {a: s.get(bal(a), Vint(0)).n for a in model} == model


@pytest.mark.trivial
@settings(max_examples=25, deadline=None)
@given(addrs, addrs, st.integers(0, 2 ** 256 - 1))
def test_runs_are_deterministic(deployed, frm, to, n):
    a = call(deployed, frm, "transfer", to, n)
    b = call(deployed, frm, "transfer", to, n)
    assert a == b


@pytest.mark.derived
@given(st.integers(0, 2 ** 256 - 1), st.integers(0, 2 ** 256 - 1))
def test_expression_evaluation_is_pure(x, y):
    fn = TOKEN.functions["transfer"]
    mem = Memory(StorageLayout.of_program(TOKEN), {}, {bal(x): Vint(y)})
    st_ = ExecState(TOKEN, fn, {0: Vint(x)}, mem, MachineEnv(ME, x), [])
    e = A.Ebinop("add", A.Eindex(A.Eglob("balances", Thashmap(TINT, TINT)), A.Etemp(0), TINT), A.Etemp(0))
    assert eval_expr(st_, e) == eval_expr(st_, e) == Vint((x + y) % 2 ** 256)
    assert mem.storage == {bal(x): Vint(y)}
