"""Shared fixtures-by-function for the test suite."""
from __future__ import annotations

from functools import lru_cache

from minicevm.evm.keccak import keccak256
from minicevm.examples import source
from minicevm.pipeline.driver import compile_program

# acceptance results, filled by test_acceptance and printed by conftest
ACCEPTANCE: dict = {}

TOKEN_BALANCES_SLOT = 1


@lru_cache(maxsize=None)
def compiled(name: str, optimize: bool = True):
    return compile_program(source(name), optimize=optimize)


def w(n: int) -> bytes:
    return n.to_bytes(32, "big")


def mapping_slot(key: int, slot: int) -> int:
    """Storage address of m[key] for a mapping declared at ``slot``."""
    return keccak256(w(key) + w(slot))


def contract(body: str, sig: str, name: str = "C") -> str:
    """Wrap an object body and signature entries into a complete source unit."""
    return (f"object signature {name}Sig = {{\n{sig}\n}}\n\n"
            f"object {name} : {name}Sig {{\n{body}\n}}\n\n"
            f"layer L : [{{}}] {name}Sig = {{ o = {name} }}\n")


def chain_of_lets(n: int, param: str = "x") -> str:
    """Method body whose n temps are all live at the final sum."""
    lets = "\n".join(f"    let a{i} = {param} + {i} in" for i in range(n))
    total = " + ".join(f"a{i}" for i in range(n))
    return f"{lets}\n    {total}"
