"""Methodical code: one flat statement list per deployed program.

The runtime program starts with the selector dispatcher, followed by a
shared revert block and the bodies of every method and private function.
The constructor program holds the constructor body and its own revert block.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..core import ast as A
from ..core.values import Label, Vint
from ..errors import DuplicateLabel, DuplicateSelector
from .clinear import dispatch_gas, entry_label
from .expressionless import (XMachine, XProgram, Xbinop, Xcalldataload, Xdup, Xjumpi, Xlabel,
                             Xpush, Xrevert)

SELECTOR_SHIFT = 1 << 224
RUNTIME = "$runtime"
CONSTRUCTOR = "$constructor"


def revert_label(program: str) -> Label:
    return Label(program, "revert")


@dataclass
class MethodicalProgram:
    name: str
    runtime: list
    constructor: list
    selectors: dict                      # method name -> selector
    events: dict = field(default_factory=dict)
    nmethods: int = 0
    owners: dict = field(default_factory=dict)   # (program, index) -> function name


def dispatcher(methods: list) -> list:
    seen = {}
    code = [Xpush(Vint(SELECTOR_SHIFT)), Xpush(Vint(0)), Xcalldataload(), Xbinop("div")]
    for f in methods:
        if f.selector in seen:
            raise DuplicateSelector(f"{f.name} and {seen[f.selector]} share selector {f.selector:#010x}")
        seen[f.selector] = f.name
        code += [Xdup(1), Xpush(Vint(f.selector)), Xbinop("eq"), Xpush(entry_label(f.name)),
                 Xjumpi()]
    return code


def _check_labels(code: list):
    seen = set()
    for s in code:
        if type(s) is Xlabel:
            if s.label in seen:
                raise DuplicateLabel(f"label {s.label} defined twice")
            seen.add(s.label)


def methodize(p: XProgram) -> MethodicalProgram:
    fns = list(p.functions.values())
    methods = [f for f in fns if f.kind == A.FunctionKind.METHOD]
    owners = {}
    runtime = dispatcher(methods) + [Xlabel(revert_label(RUNTIME)), Xrevert()]
    for i in range(len(runtime)):
        owners[(RUNTIME, i)] = None
    for f in fns:
        if f.kind != A.FunctionKind.CONSTRUCTOR:
            for s in f.code:
                owners[(RUNTIME, len(runtime))] = f.name
                runtime.append(s)
    ctor = []
    for f in fns:
        if f.kind == A.FunctionKind.CONSTRUCTOR:
            for s in f.code:
                owners[(CONSTRUCTOR, len(ctor))] = f.name
                ctor.append(s)
    owners[(CONSTRUCTOR, len(ctor))] = None
    owners[(CONSTRUCTOR, len(ctor) + 1)] = None
    ctor += [Xlabel(revert_label(CONSTRUCTOR)), Xrevert()]
    _check_labels(runtime)
    _check_labels(ctor)
    return MethodicalProgram(p.name, runtime, ctor, {f.name: f.selector for f in methods},
                             dict(p.events), len(methods), owners)


def runtime_machine(m: MethodicalProgram) -> XMachine:
    return XMachine({RUNTIME: m.runtime}, exact_memory=True, revert_label=revert_label(RUNTIME),
                    entries={"*": (RUNTIME, 0)})


def constructor_machine(m: MethodicalProgram) -> XMachine:
    return XMachine({CONSTRUCTOR: m.constructor}, exact_memory=True,
                    revert_label=revert_label(CONSTRUCTOR), entries={"*": (CONSTRUCTOR, 0)})


__all__ = ["MethodicalProgram", "methodize", "dispatcher", "runtime_machine", "constructor_machine",
           "revert_label", "RUNTIME", "CONSTRUCTOR", "dispatch_gas"]
