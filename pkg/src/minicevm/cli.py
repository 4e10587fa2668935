"""Command-line entry point: compile, check, run, disasm and evm-run.

Exit status is 0 on success, 1 for anything the user can fix (bad source,
bad flags, malformed input, a failed validation) and 2 when one of the
compiler's own invariants breaks.
"""
from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from . import __version__
from .errors import CompileError, InternalError
from .evm.backend import abi_args, format_listing
from .evm.interp import Account, Tx, create_address, run_transaction
from .evm.keccak import selector

EMIT_PHASES = ("ast", "minic", "clike", "cgraph", "allocated", "cbasic", "clinear", "stacked",
               "expressionless", "peephole", "methodical", "evm")
RUN_PHASES = ("minic", "clike", "cgraph", "cbasic", "clinear", "stacked", "expressionless",
              "peephole", "methodical")
DEFAULT_ADDRESS = 0xC0DE


class UsageError(Exception):
    pass


def _num(x) -> int:
    try:
        return int(x, 0) if isinstance(x, str) else int(x)
    except (TypeError, ValueError):
        raise UsageError(f"not a number: {x!r}") from None


def parse_hex(text: str) -> bytes:
    t = "".join(text.split())
    if t[:2].lower() == "0x":
        t = t[2:]
    if len(t) % 2:
        raise UsageError("hex input has an odd number of digits")
    try:
        return bytes.fromhex(t)
    except ValueError:
        raise UsageError("malformed hex input") from None


def hex_out(b: bytes) -> str:
    return "0x" + b.hex()


def _read_hex_arg(arg: str) -> bytes:
    p = Path(arg)
    if p.is_file():
        return parse_hex(p.read_text())
    return parse_hex(arg)


def _read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise UsageError(f"{path}: invalid JSON ({e})") from None


def _print_json(obj, out=None):
    print(json.dumps(obj, sort_keys=True), file=out or sys.stdout)


def _rules(args):
    """Rule list for the flags given, or None when optimization is off."""
    from .peephole import load_rules
    extra = getattr(args, "rules", None)
    if not args.optimize and not extra:
        return None
    rules = load_rules() if args.optimize else []
    if extra:
        rules = rules + load_rules(extra)
    return rules


def _compile(args, src: str):
    from .pipeline.driver import compile_program
    rules = _rules(args)
    return compile_program(src, optimize=rules is not None, rules=rules)


# ------------------------------------------------------------------ compile

def cmd_compile(args) -> int:
    from .frontend.parser import parse
    from .frontend.vcs import emit_vcs, vcs_jsonl
    from .pipeline.serialize import dump

    path = Path(args.file)
    src = path.read_text()
    name = path.stem
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    art = _compile(args, src)

    (out / f"{name}.runtime.hex").write_text(hex_out(art.runtime_code) + "\n")
    (out / f"{name}.deploy.hex").write_text(hex_out(art.deploy_data()) + "\n")
    smap = {"format": "minicevm-sourcemap", "version": 1,
            "runtime": {str(i): off for i, off in enumerate(art.runtime.offsets)},
            "constructor": {str(i): off for i, off in enumerate(art.constructor.offsets)}}
    (out / f"{name}.srcmap.json").write_text(json.dumps(smap, indent=1) + "\n")
    (out / f"{name}.abi.json").write_text(json.dumps(art.abi(), indent=1) + "\n")
    (out / f"{name}.vcs.jsonl").write_text(vcs_jsonl(emit_vcs(art.minic)))

    for phase in args.emit or ():
        if phase == "ast":
            text = dump("ast", parse(src))
        elif phase == "peephole":
            text = dump(phase, art.optimized)
        elif phase == "evm":
            text = json.dumps({"format": "minicevm-ir", "version": 1, "phase": "evm",
                               "runtime": hex_out(art.runtime_code),
                               "constructor": hex_out(art.constructor.code),
                               "listing": format_listing(art.runtime_code).splitlines()},
                              indent=1, sort_keys=True)
        else:
            text = dump(phase, getattr(art, phase))
        (out / f"{name}.{phase}.json").write_text(text + "\n")

    if args.opt_report:
        rep = art.opt_report.to_json() if art.opt_report else {"version": 1, "total": 0,
                                                               "gas_saved": 0, "rules": [],
                                                               "functions": {}}
        (out / f"{name}.opt.json").write_text(json.dumps(rep, indent=1, sort_keys=True) + "\n")
        _print_json(rep)
    return 0


# -------------------------------------------------------------------- check

def cmd_check(args) -> int:
    from .pipeline.driver import compile_program
    from .validation.differential import ValidationReport, differential_run, load_script
    from .validation.fuzz import fuzz_campaign, method_arities, random_txs

    if args.file is None and not args.fuzz:
        raise UsageError("check needs a source file or --fuzz N")
    rules = _rules(args)
    report = ValidationReport()
    if args.file is not None:
        path = Path(args.file)
        art = compile_program(path.read_text(), optimize=rules is not None, rules=rules)
        script = Path(args.txs) if args.txs else path.with_suffix(".json")
        if script.is_file():
            txs = load_script(script)
        else:
            txs = random_txs(random.Random(args.seed), method_arities(art), 10)
        report.merge(differential_run(art, txs))
    if args.fuzz:
        report.merge(fuzz_campaign(args.fuzz, args.seed, optimize=rules is not None, rules=rules))
    _print_json(report.to_json())
    if not report.ok:
        print(f"error: {report.divergences[0]}", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------- run

def _outcome_json(phase, o) -> dict:
    from .pipeline.serialize import state_to_json, value_to_json
    from .validation.relations import events_to_logs
    d = {"format": "minicevm-outcome", "version": 1, "phase": phase, "success": o.success,
         "gas": o.gas, "state": state_to_json(o.storage, o.balances)}
    if o.success:
        d["value"] = None if o.value is None else value_to_json(o.value)
        d["events"] = [{"topics": [hex(t) for t in ts], "data": hex_out(data)}
                       for ts, data in events_to_logs(o.events)]
    else:
        d["reason"] = o.reason
    return d


def _trace_line(state, gas) -> dict:
    import dataclasses
    from .pipeline.serialize import to_data
    st = {"type": type(state).__name__}
    for f in dataclasses.fields(state):
        v = getattr(state, f.name)
        if hasattr(v, "abi_signature") and hasattr(v, "name"):
            v = v.name          # a whole function; its name is enough
        try:
            st[f.name] = to_data(v)
        except TypeError:
            st[f.name] = repr(v)
    return {"gas": gas, "state": st}


def cmd_run(args) -> int:
    from .core.machine import MachineEnv
    from .pipeline.driver import Chain, run_phase
    from .pipeline.serialize import state_from_json, state_to_json
    from .validation.differential import DEFAULT_SENDERS, START_BALANCE
    from .validation.relations import storage_to_words

    art = _compile(args, Path(args.file).read_text())
    margs = [_num(a) for a in args.args]
    cargs = [_num(a) for a in args.ctor_args.split(",") if a] if args.ctor_args else []
    sender = _num(args.sender)
    phase = "minic" if args.ref else args.phase
    address = create_address(DEFAULT_SENDERS[0], 0)
    balances = {s: START_BALANCE for s in DEFAULT_SENDERS}
    storage = None
    if args.state:
        storage, bal = state_from_json(_read_json(args.state))
        balances.update(bal)

    if phase is None:
        chain = Chain(balances, args.block)
        if args.method == "constructor":
            rc = chain.deploy(art, margs, sender, _num(args.value), args.gas_limit, trace=args.trace)
        else:
            dep = chain.deploy(art, cargs, DEFAULT_SENDERS[0])
            if not dep.success:
                raise UsageError(f"deployment failed: {dep.status} {dep.error}")
            if storage is not None:
                chain.world[address].storage = storage_to_words(storage)
            rc = chain.call(address, art, args.method, margs, sender, _num(args.value),
                            args.gas_limit, args.block, trace=args.trace)
        for step in rc.trace or ():
            _print_json(step)
        _print_json(rc.to_json())
        return 0

    trace = [] if args.trace else None
    if storage is None and args.method != "constructor":
        env = MachineEnv(address, DEFAULT_SENDERS[0], 0, args.block, dict(balances))
        dep = run_phase(art, phase, {}, env, "constructor", cargs)
        if not dep.success:
            raise UsageError(f"constructor failed: {dep.reason}")
        storage = dep.storage
    value = _num(args.value)
    balances[sender] = balances.get(sender, 0) - value
    balances[address] = balances.get(address, 0) + value
    env = MachineEnv(address, sender, value, args.block, balances)
    o = run_phase(art, phase, storage or {}, env, args.method, margs, trace=trace)
    for st, gas in trace or ():
        _print_json(_trace_line(st, gas))
    _print_json(_outcome_json(phase, o))
    if args.state_out:
        Path(args.state_out).write_text(json.dumps(state_to_json(o.storage, o.balances),
                                                   indent=1, sort_keys=True) + "\n")
    return 0


# ------------------------------------------------------------ disasm, evm-run

def cmd_disasm(args) -> int:
    code = _read_hex_arg(args.code)
    if code:
        print(format_listing(code))
    return 0


def cmd_evm_run(args) -> int:
    code = _read_hex_arg(args.code)
    tx = _read_json(args.tx) if args.tx else {}
    if not isinstance(tx, dict):
        raise UsageError("transaction must be a JSON object")
    sender = _num(tx.get("sender", "0xa11ce"))
    if "calldata" in tx:
        data = parse_hex(tx["calldata"])
    elif "signature" in tx:
        data = selector(tx["signature"]).to_bytes(4, "big") + abi_args([_num(a) for a in tx.get("args", [])])
    else:
        data = b""
    world = {sender: Account(balance=_num(tx.get("balance", 10 ** 24)))}
    if tx.get("create"):
        to, data = None, code + data
    else:
        to = _num(tx.get("to", DEFAULT_ADDRESS))
        storage = {_num(k): _num(v) for k, v in tx.get("storage", {}).items()}
        world[to] = Account(0, 1, code, storage)
    t = Tx(sender, to, data, _num(tx.get("value", 0)), _num(tx.get("gas_limit", args.gas_limit)),
           _num(tx.get("block", 0)))
    rc = run_transaction(world, t, trace=args.trace)
    for step in rc.trace or ():
        _print_json(step)
    _print_json(rc.to_json())
    return 0


# ------------------------------------------------------------------- parser

def _opt_flags(p):
    p.add_argument("-O", dest="optimize", action="store_true", help="enable the bundled peephole rules")
    p.add_argument("--rules", metavar="FILE", help="extra rewrite rules (checked before use)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="minicevm", description="Compile contracts to EVM bytecode.")
    ap.add_argument("--version", action="version", version=f"minicevm {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile a source file to bytecode and reports")
    p.add_argument("file")
    _opt_flags(p)
    p.add_argument("--emit", action="append", choices=EMIT_PHASES, metavar="PHASE",
                   help=f"also dump a phase as JSON; one of {', '.join(EMIT_PHASES)}")
    p.add_argument("--opt-report", action="store_true", help="write and print fired rules and gas saved")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("check", help="differential validation against the reference semantics")
    p.add_argument("file", nargs="?")
    _opt_flags(p)
    p.add_argument("--txs", metavar="FILE", help="transaction script (JSON list)")
    p.add_argument("--fuzz", type=int, default=0, metavar="N", help="also check N random programs")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("run", help="deploy and call a method on the EVM or in one IR")
    p.add_argument("file")
    p.add_argument("method")
    p.add_argument("args", nargs="*")
    _opt_flags(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--ref", action="store_true", help="use the reference semantics")
    g.add_argument("--phase", choices=RUN_PHASES, help="use this phase's interpreter")
    p.add_argument("--state", metavar="FILE", help="storage snapshot to start from")
    p.add_argument("--state-out", metavar="FILE", help="write the resulting snapshot (IR runs)")
    p.add_argument("--ctor-args", default="", help="comma-separated constructor arguments")
    p.add_argument("--sender", default="0xa11ce")
    p.add_argument("--value", default="0")
    p.add_argument("--block", type=int, default=0)
    p.add_argument("--gas-limit", type=int, default=3_000_000)
    p.add_argument("--trace", action="store_true", help="print one JSON line per step first")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("disasm", help="print a mnemonic listing of hex bytecode")
    p.add_argument("code", help="hex string or file containing hex")
    p.set_defaults(func=cmd_disasm)

    p = sub.add_parser("evm-run", help="run raw bytecode with a JSON transaction")
    p.add_argument("code", help="hex string or file containing hex")
    p.add_argument("--tx", metavar="FILE", help="transaction JSON")
    p.add_argument("--gas-limit", type=int, default=3_000_000)
    p.add_argument("--trace", action="store_true")
    p.set_defaults(func=cmd_evm_run)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse uses 2 for usage errors; here 2 is reserved for internal faults
        return 1 if e.code == 2 else e.code
    try:
        return args.func(args)
    except InternalError as e:
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    except CompileError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    except (UsageError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
