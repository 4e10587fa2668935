import dataclasses
import functools

import pytest
from hypothesis import given, settings, strategies as st

from helpers import TOKEN_BALANCES_SLOT, compiled, mapping_slot
from minicevm.core.machine import MachineEnv
from minicevm.core.values import Label, Pair, Singleton, Vhash2, Vint
from minicevm.errors import UnresolvedLabel
from minicevm.evm.interp import create_address
from minicevm.examples import script
from minicevm.validation import (Session, TxSpec, differential_run, entries_to_w256, gas_invariant,
                                 lockstep, out_of_gas_run, rel_stk, storage_to_words, store_mismatch)
from minicevm.validation.differential import DEFAULT_SENDERS, START_BALANCE

ALICE, BOB = 0xA11CE, 0xB0B
TOKEN_TXS = [TxSpec("constructor", (), ALICE), TxSpec("transfer", (BOB, 400), ALICE)]


def deployed_token():
    s = Session(compiled("token"))
    for tx in TOKEN_TXS:
        r = s.run(tx)
        assert not r.divergences
    return s


@functools.lru_cache(maxsize=None)
def token_storages():
    s = deployed_token()
    return s.storage, s.chain.storage(s.address)


# ------------------------------------------------------------- relations

@pytest.mark.derived
def test_label_and_hash_entries_become_words():
    lab = Label("transfer", "entry")
    key = Vhash2(Vint(TOKEN_BALANCES_SLOT), Vint(ALICE))
    words = entries_to_w256([Vint(7), lab, key], {lab: 0x42})
    assert words == [7, 0x42, mapping_slot(ALICE, TOKEN_BALANCES_SLOT)]


@pytest.mark.trivial
def test_unknown_label_has_no_word():
    with pytest.raises(UnresolvedLabel):
        entries_to_w256([Label("f", "nowhere")], {})
    assert not rel_stk([Label("f", "nowhere")], [0], {})


@pytest.mark.trivial
def test_stack_relation_checks_length_and_order():
    assert rel_stk([Vint(1), Vint(2)], [1, 2], {})
    assert not rel_stk([Vint(1), Vint(2)], [2, 1], {})
    assert not rel_stk([Vint(1)], [1, 1], {})


@pytest.mark.derived
def test_storage_image_uses_mapping_slots():
    ir = {Singleton(0): Vint(5), Pair(Singleton(TOKEN_BALANCES_SLOT), BOB): Vint(400),
          Pair(Singleton(TOKEN_BALANCES_SLOT), ALICE): Vint(0)}
    assert storage_to_words(ir) == {0: 5, mapping_slot(BOB, TOKEN_BALANCES_SLOT): 400}


@pytest.mark.trivial
def test_gas_invariant_is_exact():
    assert gas_invariant(21000, 79000, 100000)
    assert not gas_invariant(21001, 79000, 100000)
    assert not gas_invariant(21000, 79001, 100000)


# ------------------------------------------------------- fault injection

@pytest.mark.derived
@settings(deadline=None)
@given(st.integers(0, 255))
def test_flipped_storage_bit_is_located(bit):
    ir, evm = token_storages()
    assert store_mismatch(ir, evm) is None
    victim = mapping_slot(BOB, TOKEN_BALANCES_SLOT)
    bad = dict(evm)
    bad[victim] ^= 1 << bit
    assert store_mismatch(ir, bad) == victim


@pytest.mark.derived
def test_extra_evm_slot_is_a_mismatch():
    ir, evm = token_storages()
    assert store_mismatch(ir, {**evm, 12345: 1}) == 12345


@pytest.mark.derived
@settings(deadline=None)
@given(st.integers(0, 255))
def test_flipped_stack_word_is_caught(bit):
    stack = [Vint(3), Vhash2(Vint(1), Vint(ALICE))]
    good = entries_to_w256(stack, {})
    assert rel_stk(stack, good, {})
    bad = list(good)
    bad[-1] ^= 1 << bit
    assert not rel_stk(stack, bad, {})


def patched(art, ctor=False, **subs):
    """Artifact whose runtime (or constructor) bytecode has one substitution applied."""
    asm = art.constructor if ctor else art.runtime
    code = asm.code
    for old, new in subs.items():
        old, new = bytes.fromhex(old), bytes.fromhex(new)
        assert code.count(old) >= 1
        code = code.replace(old, new, 1)
    new_asm = dataclasses.replace(asm, code=code)
    return dataclasses.replace(art, **{"constructor" if ctor else "runtime": new_asm})


@pytest.mark.derived
def test_lockstep_passes_on_honest_code():
    art = compiled("token")
    env = MachineEnv(create_address(ALICE, 0), ALICE)
    rep = lockstep(art, "constructor", [], {}, env, check_store="every")
    assert rep.ok and rep.gas_checks > 0


@pytest.mark.derived
def test_lockstep_catches_wrong_constant():
    # the deployer's initial balance, 100000 = 0x0186a0
    art = patched(compiled("token"), ctor=True, **{"620186a0": "620186a1"})
    env = MachineEnv(create_address(ALICE, 0), ALICE)
    rep = lockstep(art, "constructor", [], {}, env, check_store="every")
    assert not rep.ok
    assert "stacks differ" in rep.failures[0][2]


@pytest.mark.derived
def test_lockstep_catches_offset_drift():
    art = compiled("token")
    offs = list(art.constructor.offsets)
    offs[3] += 1
    art = dataclasses.replace(art, constructor=dataclasses.replace(art.constructor, offsets=offs))
    rep = lockstep(art, "constructor", [], {}, MachineEnv(create_address(ALICE, 0), ALICE))
    # the EVM is stopped one byte late, so the checks fire at that boundary
    assert not rep.ok and rep.failures[0][0] == 3


@pytest.mark.derived
def test_differential_run_reports_tampered_bytecode():
    art = patched(compiled("token"), ctor=True, **{"620186a0": "620186a1"})
    rep = differential_run(art, TOKEN_TXS)
    assert not rep.ok
    assert {d.phase for d in rep.divergences} >= {"minic", "methodical"}
    assert rep.to_json()["divergences"][0]["tx"] == 0


@pytest.mark.trivial
def test_honest_token_run_is_clean():
    rep = differential_run(compiled("token"), TOKEN_TXS + [TxSpec("transfer", (ALICE, 10 ** 9), BOB)])
    assert rep.ok and rep.txs == 3
    assert rep.to_json() == {"format": "minicevm-validation", "version": 1, "ok": True,
                             "programs": 1, "transactions": 3, "divergences": []}


# -------------------------------------------------------- scenarios

@pytest.mark.derived
def test_oversized_transfer_reverts_everywhere():
    s = deployed_token()
    r = s.run(TxSpec("transfer", (ALICE, 10 ** 9), BOB))
    assert not r.divergences
    assert not r.receipt.success and r.receipt.status == "revert"
    assert not any(o.success for o in r.outcomes.values())


@pytest.mark.derived
def test_crowdfunding_refund_after_deadline():
    backer = DEFAULT_SENDERS[1]
    txs = [TxSpec("constructor", (100, 5000), ALICE, block=1),
           TxSpec("donate", (), backer, value=3000, block=10),
           TxSpec("donate", (), backer, value=5, block=150),
           TxSpec("claim", (), backer, block=151)]
    s = Session(compiled("crowdfunding"))
    results = [s.run(t) for t in txs]
    assert all(not r.divergences for r in results)
    assert [r.receipt.success for r in results] == [True, True, False, True]
    assert s.chain.balance(backer) == START_BALANCE


@pytest.mark.derived
def test_tiny_gas_limit_is_reported():
    s = deployed_token()
    r = s.run(TxSpec("transfer", (BOB, 1), ALICE, gas_limit=30000))
    assert r.receipt.status == "fail"
    assert r.divergences and r.divergences[0].phase == "minic"


@pytest.mark.derived
def test_half_gas_replays_fail_safely():
    checks = out_of_gas_run(compiled("token"), script("token"))
    assert checks and all(c.ok for c in checks)
    assert all(c.gas_limit * 2 >= c.gas_used for c in checks)
