import pytest
from hypothesis import given, strategies as st

from minicevm.evm import fees as F
from minicevm.evm.backend import assemble_insts
from minicevm.evm.interp import (Account, ConstantCtx, ContractFail, ContractReturn, ContractRevert,
                                 EvmProgram, InstructionContinue, InstructionToEnvironment, Tx,
                                 VariableCtx, create_address, instruction_sem, meter_gas,
                                 program_sem, run_code, run_transaction)
from minicevm.evm.keccak import keccak256, selector
from minicevm.evm.opcodes import decode, dup, op, push, swap

MASK = 2 ** 256 - 1
words = st.integers(0, MASK)


def asm(*insts):
    return assemble_insts(list(insts))


def run(code, gas=100000, storage=None, calldata=b""):
    return run_code(code, storage or {}, {}, 0xC0DE, calldata, 0xA11CE, 0, 0, gas)


def ctx(*insts):
    return ConstantCtx(EvmProgram.from_bytes(asm(*insts)), 0xC0DE)


@pytest.mark.paper
def test_static_gas_costs():
    v = VariableCtx(stack=[1, 2])
    assert meter_gas(op("ADD"), v) == 3
    assert meter_gas(op("JUMPDEST"), v) == 1
    assert meter_gas(op("SSTORE"), VariableCtx(stack=[5, 0])) == 20000
    assert meter_gas(op("SSTORE"), VariableCtx(stack=[5, 0], storage={0: 1})) == 5000


@pytest.mark.trivial
def test_add_pops_two_pushes_sum():
    c = ctx(op("ADD"))
    r = instruction_sem(c, VariableCtx(stack=[2, 3], gas=10), op("ADD"))
    assert isinstance(r, InstructionContinue)
    assert r.v.stack == [5] and r.v.pc == 1 and r.v.gas == 7


@pytest.mark.paper
def test_keccak_of_empty_input():
    assert keccak256(b"") == 0xc5d2460186f7233c927e7db2dcc703c0e500b653ca82273b7bfad8045d85a470


@pytest.mark.paper
def test_erc20_transfer_selector():
    assert selector("transfer(address,uint256)") == 0xa9059cbb


@pytest.mark.derived
def test_create_address_known_vector():
    sender = 0x6ac7ea33f8831ea9dcc53393aaa88b25a785dbf0
    assert create_address(sender, 0) == 0xcd234a471b72ba2f1ccf0a70fcaba648a5eecd8d
    assert create_address(sender, 1) == 0x343c43a37d37dff08ae8c4a11544c718abb4fcf8


@pytest.mark.trivial
def test_zero_fuel_returns_input_state():
    r = InstructionContinue(VariableCtx(gas=50))
    assert program_sem(ctx(push(1), op("STOP")), 0, r) is r


@pytest.mark.trivial
def test_push_then_stop():
    r = run(asm(push(1), op("STOP")), gas=10)
    assert isinstance(r.action, ContractReturn) and r.action.data == b""
    assert r.v.stack == [1] and r.v.gas == 7


@pytest.mark.trivial
def test_running_off_the_end_stops():
    r = run(asm(push(1)))
    assert isinstance(r.action, ContractReturn)


@pytest.mark.trivial
def test_out_of_gas_fails():
    r = run(asm(push(1), push(2), op("ADD")), gas=8)
    assert isinstance(r.action, ContractFail)


@pytest.mark.trivial
@pytest.mark.parametrize("code", [
    asm(op("ADD")),                                     # stack underflow
    asm(push(3), op("JUMP"), op("STOP")),               # target is not a JUMPDEST
    bytes.fromhex("600456605b"),                         # 0x5b at pc 4 is push data
    bytes([0xFE]),
])
def test_exceptional_halts(code):
    assert isinstance(run(code).action, ContractFail)


@pytest.mark.trivial
def test_stack_limit():
    ok = run(asm(*[push(0)] * 1024), gas=10 ** 6)
    assert isinstance(ok.action, ContractReturn)
    over = run(asm(*[push(0)] * 1025), gas=10 ** 6)
    assert isinstance(over.action, ContractFail)


@pytest.mark.derived
def test_jump_to_jumpdest_and_loop_with_fuel():
    code = asm(op("JUMPDEST"), push(0), op("JUMP"))
    r = run_code(code, {}, {}, 0, b"", 0, 0, 0, 10 ** 9, fuel=30)
    assert isinstance(r, InstructionContinue)
    assert r.v.gas == 10 ** 9 - 10 * (1 + 3 + 8)


@pytest.mark.derived
def test_memory_expansion_is_charged():
    r = run(asm(push(7), push(0), op("MSTORE"), push(32), push(0), op("RETURN")), gas=100)
    assert r.action.data == (7).to_bytes(32, "big")
    # PUSH*4 + MSTORE(3 + one word) + RETURN(0, already paid)
    assert r.v.gas == 100 - (4 * 3 + 3 + F.mem_cost(1))


@pytest.mark.trivial
def test_revert_returns_data_and_keeps_storage():
    world = {0xC0DE: Account(code=asm(push(9), push(0), op("SSTORE"), push(0), push(0),
                                      op("REVERT")), storage={0: 4})}
    r = run_transaction(world, Tx(0xA11CE, 0xC0DE, b"", 0, 100000))
    assert r.status == "revert" and r.storage_delta == {}
    assert world[0xC0DE].storage == {0: 4}


@pytest.mark.trivial
def test_gas_limit_below_intrinsic():
    world = {0xC0DE: Account(code=asm(op("STOP")))}
    r = run_transaction(world, Tx(0xA11CE, 0xC0DE, b"\x01", 0, F.G_TX))
    assert r.status == "fail" and r.gas_used == F.G_TX


@pytest.mark.derived
def test_intrinsic_gas_counts_zero_and_nonzero_bytes():
    assert F.intrinsic_gas(b"\x00\x01\x00") == 21000 + 2 * 4 + 68
    assert F.intrinsic_gas(b"", create=True) == 53000


@pytest.mark.derived
def test_calldataload_pads_with_zeros():
    r = run(asm(push(2), op("CALLDATALOAD")), calldata=b"\xaa\xbb\xcc")
    assert r.v.stack == [0xcc << 248]


@pytest.mark.trivial
def test_sstore_sload_round_trip():
    r = run(asm(push(42), push(1), op("SSTORE"), push(1), op("SLOAD")))
    assert r.v.storage == {1: 42} and r.v.stack == [42]


# ----------------------------------------------------------- properties

BINOPS = {
    "ADD": lambda a, b: (a + b) & MASK,
    "SUB": lambda a, b: (a - b) & MASK,
    "MUL": lambda a, b: (a * b) & MASK,
    "DIV": lambda a, b: a // b if b else 0,
    "MOD": lambda a, b: a % b if b else 0,
    "LT": lambda a, b: int(a < b),
    "GT": lambda a, b: int(a > b),
    "EQ": lambda a, b: int(a == b),
    "AND": lambda a, b: a & b,
    "OR": lambda a, b: a | b,
    "XOR": lambda a, b: a ^ b,
}


@pytest.mark.derived
@given(st.sampled_from(sorted(BINOPS)), words, words)
def test_binops_match_modular_arithmetic(name, a, b):
    # first operand is the top of the stack
    r = run(asm(push(b, 32), push(a, 32), op(name)))
    assert r.v.stack == [BINOPS[name](a, b)]


@pytest.mark.derived
@given(st.lists(words, min_size=17, max_size=17), st.integers(1, 16))
def test_dup_and_swap(stack, n):
    v = VariableCtx(stack=list(stack), gas=10)
    assert instruction_sem(ctx(dup(n)), v.copy(), dup(n)).v.stack == stack + [stack[-n]]
    expect = list(stack)
    expect[-1], expect[-1 - n] = expect[-1 - n], expect[-1]
    assert instruction_sem(ctx(swap(n)), v.copy(), swap(n)).v.stack == expect


@pytest.mark.trivial
@given(st.binary(max_size=64))
def test_decoding_never_crashes_and_covers_bytes(code):
    insts = decode(code)
    assert sum(i.size for _, i in insts) >= len(code)
    assert all(pc < len(code) for pc, _ in insts)
    assert isinstance(run(code, gas=10 ** 5), (InstructionToEnvironment, InstructionContinue))


@pytest.mark.trivial
def test_revert_action_type():
    r = run(asm(push(0), push(0), op("REVERT")))
    assert isinstance(r.action, ContractRevert)
