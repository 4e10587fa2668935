"""Relations between symbolic IR states and concrete EVM states."""
from __future__ import annotations

from functools import lru_cache

from ..core.values import Label, Vhash, Vhash2, Vint, Vunit, hashkey_to_value
from ..errors import InternalError, UnresolvedLabel
from ..evm.keccak import keccak256


def _w(n: int) -> bytes:
    return n.to_bytes(32, "big")


@lru_cache(maxsize=65536)
def concrete(v) -> int:
    """The EVM word a symbolic value stands for."""
    t = type(v)
    if t is Vint:
        return v.n
    if t is Vunit:
        return 0
    if t is Vhash:
        return keccak256(_w(concrete(v.v)))
    if t is Vhash2:
        return keccak256(_w(concrete(v.v2)) + _w(concrete(v.v1)))
    raise InternalError(f"no word for {v!r}")


def entries_to_w256(stack, labels: dict) -> list:
    """Concrete image of an IR stack (bottom first); labels map to code offsets."""
    out = []
    for x in stack:
        if type(x) is Label:
            if x not in labels:
                raise UnresolvedLabel(f"label {x} has no code offset")
            out.append(labels[x])
        else:
            out.append(concrete(x))
    return out


def rel_stk(ir_stack, evm_stack, labels: dict) -> bool:
    if len(ir_stack) != len(evm_stack):
        return False
    try:
        return entries_to_w256(ir_stack, labels) == list(evm_stack)
    except UnresolvedLabel:
        return False


def storage_to_words(storage: dict) -> dict:
    """Concrete image of an IR storage.

    Two distinct keys landing on one word would make the image meaningless,
    so that is checked for on every call rather than assumed.
    """
    out = {}
    seen = {}
    for k, v in storage.items():
        addr = concrete(hashkey_to_value(k))
        other = seen.setdefault(addr, k)
        if other != k:
            raise InternalError(f"storage keys {other} and {k} collide at {addr:#x}")
        w = concrete(v)
        if w:
            out[addr] = w
    return out


def store_mismatch(ir_storage: dict, evm_storage: dict):
    """The first slot (lowest address) where the two storages disagree, or None."""
    a = storage_to_words(ir_storage)
    b = {k: v for k, v in evm_storage.items() if v}
    bad = sorted(k for k in a.keys() | b.keys() if a.get(k, 0) != b.get(k, 0))
    return bad[0] if bad else None


def rel_store(ir_storage: dict, evm_storage: dict) -> bool:
    return store_mismatch(ir_storage, evm_storage) is None


def gas_invariant(ir_used: int, evm_remaining: int, gas_limit: int) -> bool:
    """IR gas spent so far plus EVM gas left must equal the limit."""
    return ir_used + evm_remaining == gas_limit


def rel_mem(ir_mem_words: int, evm_mem_words: int) -> bool:
    """The machine tracks only the memory high-water mark; contents are scratch."""
    return ir_mem_words == evm_mem_words


def rel_code(statements, code: bytes, offsets: list) -> bool:
    """Every statement's image (opcodes, not immediates) sits at its recorded offset."""
    from ..evm.backend import build_label_map, image
    from ..evm.opcodes import decode
    if build_label_map(statements)[2] != len(code):
        return False
    decoded = dict(decode(code))
    for s, off in zip(statements, offsets):
        pc = off
        for i in image(s):
            got = decoded.get(pc)
            if got is None or got.op != i.op:
                return False
            pc += i.size
    return True


def events_to_logs(events) -> list:
    return [(tuple(t), b"".join(_w(d) for d in data)) for t, data in events]


def rel_events(ir_events, evm_logs) -> bool:
    return events_to_logs(ir_events) == [(tuple(t), d) for _, t, d in evm_logs]


def return_word(value, data: bytes) -> bool:
    if value is None or type(value) is Vunit:
        return data == b""
    return data == _w(concrete(value))
