import pytest
from hypothesis import given, strategies as st

from helpers import compiled
from minicevm.core.values import Label, Vint
from minicevm.errors import ImmediateTooWide, UnresolvedLabel
from minicevm.evm.backend import (Layout, assemble, assemble_insts, build_label_map, code_from_counter,
                                  disassemble, format_listing, image, image_size)
from minicevm.evm.opcodes import Inst, OPCODES, decode, is_push, op, push
from minicevm.examples import NAMES
from minicevm.pipeline.expressionless import Xbinop, Xjump, Xlabel, Xpop, Xpush

L1, L2 = Label("f", "a"), Label("f", "b")


@pytest.mark.derived
def test_push_push_add_bytes():
    a = assemble([Xpush(Vint(2)), Xpush(Vint(3)), Xbinop("add")])
    assert a.code == bytes.fromhex("6002600301")
    assert a.offsets == [0, 2, 4]


@pytest.mark.trivial
def test_empty_program_assembles_to_nothing():
    a = assemble([])
    assert a.code == b"" and a.offsets == [] and a.labels == {}


@pytest.mark.derived
def test_label_offsets_and_pushes():
    code = [Xpush(L2), Xjump(), Xlabel(L1), Xpop(), Xlabel(L2), Xpush(L1), Xjump()]
    labels, offsets, total = build_label_map(code)
    # PUSH2 xx xx (3) JUMP (1) JUMPDEST (1) POP (1)
    assert labels == {L1: 4, L2: 6}
    assert offsets == [0, 3, 4, 5, 6, 7, 10]
    a = assemble(code)
    assert a.code == bytes.fromhex("610006" "56" "5b" "50" "5b" "610004" "56")
    assert len(a.code) == total


@pytest.mark.derived
@pytest.mark.parametrize("name", NAMES)
def test_every_label_is_a_jumpdest(name):
    art = compiled(name)
    for asm in (art.runtime, art.constructor):
        ops = dict(decode(asm.code))
        assert all(ops[pc].name == "JUMPDEST" for pc in asm.labels.values())


@pytest.mark.trivial
def test_unresolved_label():
    with pytest.raises(UnresolvedLabel):
        assemble([Xpush(L1), Xjump()])


@pytest.mark.trivial
def test_oversized_immediate():
    with pytest.raises(ImmediateTooWide):
        image(Xpush(L1), Layout({L1: 1 << 16}))


@pytest.mark.trivial
def test_minimal_width_pushes():
    assert image(Xpush(Vint(0))) == [push(0, 1)]
    assert image(Xpush(Vint(256))) == [push(256, 2)]
    assert image_size(Xpush(Vint(2 ** 255))) == 33


@pytest.mark.trivial
def test_listing_format():
    assert format_listing(bytes.fromhex("6002600301")) == "0000 PUSH1 0x02\n0002 PUSH1 0x03\n0004 ADD"


@pytest.mark.derived
def test_source_map_points_back_to_statements():
    art = compiled("token")
    for pc, idx in art.runtime.source_map:
        assert art.runtime.statement_at(pc) == idx


@pytest.mark.derived
def test_code_from_counter_skips_prefix():
    code = bytes.fromhex("6002600301")
    assert code_from_counter(code, 2) == [push(3), op("ADD")]
    assert code_from_counter(code, 5) == []


# ----------------------------------------------------------- round trip

pushes = st.integers(1, 32).flatmap(
    lambda w: st.integers(0, 2 ** (8 * w) - 1).map(lambda v: Inst(0x5F + w, v)))
plain = st.sampled_from(sorted(o for o in OPCODES if not is_push(o))).map(Inst)


@pytest.mark.derived
@given(st.lists(st.one_of(pushes, plain), max_size=40))
def test_assemble_disassemble_round_trip(insts):
    code = assemble_insts(insts)
    assert len(code) == sum(i.size for i in insts)
    assert disassemble(code) == insts
