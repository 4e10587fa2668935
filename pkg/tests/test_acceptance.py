"""Acceptance criteria 1-9, each at its stated tolerance.

Every test records a one-line verdict in ``helpers.ACCEPTANCE``; conftest
prints them after the run. Running this file directly prints the same lines.
"""
from __future__ import annotations

import copy
import functools
import math
import random
import time
from collections import defaultdict

import pytest

import helpers
from helpers import TOKEN_BALANCES_SLOT, chain_of_lets, compiled, contract, mapping_slot
from minicevm.core.machine import MachineEnv
from minicevm.errors import RuleUnsound, StackTooDeep
from minicevm.evm.backend import Layout, assemble_insts, build_label_map, code_from_counter, disassemble, image
from minicevm.evm import fees as F
from minicevm.evm.interp import copy_world, create_address
from minicevm.examples import NAMES, script, source
from minicevm.peephole import check_rule, check_rules, load_rules, optimize, parse_rule, read_rules
from minicevm.peephole.optimize import OptReport, statement, tok_gas, token
from minicevm.peephole.rules import Tok
from minicevm.pipeline import cgraph, methodical
from minicevm.pipeline.driver import IR_PHASES, Chain, compile_program
from minicevm.validation import differential_run, lockstep, out_of_gas_run
from minicevm.validation.differential import DEFAULT_SENDERS, START_BALANCE, Session
from minicevm.validation.fuzz import method_arities, random_source, random_txs

FUZZ_PROGRAMS = 500
FUZZ_TXS = 5
FUZZ_SEED = 2024


def criterion(n: int, title: str):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*a, **k):
            t0 = time.perf_counter()
            try:
                detail = fn(*a, **k)
            except BaseException as e:
                helpers.ACCEPTANCE[n] = (False, title, f"{type(e).__name__}: {str(e)[:160]}")
                raise
            helpers.ACCEPTANCE[n] = (True, title, f"{detail}; {time.perf_counter() - t0:.1f}s")
        return run
    return wrap


# ---------------------------------------------------------------- criterion 1

class TokenModel:
    """Plain-Python token used as the oracle for which calls must revert."""

    def __init__(self, owner):
        self.bal = defaultdict(int, {owner: 100000})
        self.allow = defaultdict(int)

    def transfer(self, sender, to, n):
        if sender == to or self.bal[sender] < n:
            return False
        self.bal[sender] -= n
        self.bal[to] += n
        return True

    def approve(self, sender, spender, n):
        self.allow[sender, spender] = n
        return True

    def transferFrom(self, sender, frm, to, n):
        if frm == to or self.bal[frm] < n or self.allow[frm, sender] < n:
            return False
        self.bal[frm] -= n
        self.bal[to] += n
        self.allow[frm, sender] -= n
        return True


@pytest.mark.derived
@criterion(1, "token balance sum and revert atomicity on optimized bytecode")
def test_token_balance_sum():
    t0 = time.perf_counter()
    art = compiled("token", True)
    pool = list(DEFAULT_SENDERS) + [0xE1E]
    owner = pool[0]
    base = Chain({a: START_BALANCE for a in pool})
    rc = base.deploy(art, sender=owner)
    assert rc.success
    addr = rc.contract_address
    slots = [mapping_slot(a, TOKEN_BALANCES_SLOT) for a in pool]
    rng = random.Random(1)
    sequences, steps, reverts = 1000, 0, 0
    for _ in range(sequences):
        chain = Chain()
        chain.world = copy_world(base.world)
        model = TokenModel(owner)
        for _ in range(rng.randint(4, 12)):
            kind = rng.choice(("transfer", "approve", "transferFrom"))
            sender = rng.choice(pool)
            amount = rng.choice((0, 1, rng.randrange(1, 50000), 100000, 100001, 2 ** 256 - 1))
            if kind == "transfer":
                args = [rng.choice(pool), amount]
            elif kind == "approve":
                args = [rng.choice(pool), amount]
            else:
                args = [rng.choice(pool), rng.choice(pool), amount]
            expect = getattr(model, kind)(sender, *args)
            before = dict(chain.world[addr].storage)
            r = chain.call(addr, art, kind, args, sender=sender)
            steps += 1
            assert r.success == expect, (kind, sender, args)
            store = chain.world[addr].storage
            if not r.success:
                reverts += 1
                assert store == before
            assert sum(store.get(s, 0) for s in slots) == 100000
            assert all(store.get(s, 0) == model.bal[a] for a, s in zip(pool, slots))
    elapsed = time.perf_counter() - t0
    assert elapsed < 60
    return f"{sequences} sequences, {steps} calls, {reverts} reverts"


# ------------------------------------------------------------- criteria 2, 3

def _fuzz_corpus():
    rng = random.Random(FUZZ_SEED)
    out = []
    for _ in range(FUZZ_PROGRAMS):
        src = random_source(rng)
        art = compile_program(src)
        out.append((src, art, random_txs(rng, method_arities(art), FUZZ_TXS)))
    return out


@pytest.fixture(scope="module")
def fuzz_corpus():
    return _fuzz_corpus()


@pytest.mark.derived
@criterion(2, "differential validation: reference vs every IR vs EVM")
def test_differential_corpus_and_fuzz(fuzz_corpus):
    t0 = time.perf_counter()
    divergences, txs = [], 0
    for name in NAMES:
        rep = differential_run(compiled(name, True), script(name), IR_PHASES)
        divergences += rep.divergences
        txs += rep.txs
    for _, art, tx in fuzz_corpus:
        rep = differential_run(art, tx, IR_PHASES)
        divergences += rep.divergences
        txs += rep.txs
    assert not divergences, [str(d) for d in divergences[:5]]
    assert time.perf_counter() - t0 < 300
    assert len(fuzz_corpus) >= 500 and txs >= 500 * 5
    return f"{len(NAMES)} corpus + {len(fuzz_corpus)} fuzzed programs, {txs} txs, 0 divergences"


def consumed_statements(xprog, rules) -> dict:
    """Per function, indices of unoptimized statements some rewrite replaced."""
    out = {}
    for name, f in xprog.functions.items():
        orig = [copy.copy(s) for s in f.code]
        kept = {id(s) for s in optimize(orig, rules)}
        out[name] = {i for i, s in enumerate(orig) if id(s) not in kept}
    return out


def deploy_price(art, args) -> int:
    """Gas a deployment pays for its data and the deposited runtime."""
    return F.intrinsic_gas(art.deploy_data(args), create=True) + F.G_CODEDEPOSIT * len(art.runtime_code)


def _gas_pairs(src_or_art, txs, rules):
    """Yield (spec, unopt result, opt result, cheaper expected?) per tx.

    A method call must get cheaper exactly when its unoptimized run executed
    a statement some rewrite replaced. A deployment also pays for its data
    and for every runtime byte, so it gets cheaper when those shrank too.
    """
    if isinstance(src_or_art, str):
        unopt = compile_program(src_or_art, optimize=False)
        opt = compile_program(src_or_art, optimize=True, rules=rules)
    else:
        unopt, opt = src_or_art
    consumed = consumed_statements(unopt.expressionless, rules)
    su = Session(unopt, ("minic", "expressionless"), trace_phase="expressionless")
    so = Session(opt, ("minic",))
    for spec in txs:
        if spec.method != "constructor" and su.address not in su.chain.world:
            break
        ru, ro = su.run(spec), so.run(spec)
        hit = any(st.pc in consumed.get(st.seg, ()) for st, _ in ru.trace if hasattr(st, "seg"))
        if spec.method == "constructor":
            hit = hit or deploy_price(opt, spec.args) < deploy_price(unopt, spec.args)
        yield spec, ru, ro, hit


@pytest.mark.derived
@criterion(3, "EVM gas within the source bound; optimized never costs more")
def test_gas_inequalities(fuzz_corpus):
    rules = load_rules()
    cases = strict = bound_checks = 0
    items = [((compiled(n, False), compiled(n, True)), script(n)) for n in NAMES]
    items += [(src, tx) for src, _, tx in fuzz_corpus]
    for what, txs in items:
        for spec, ru, ro, hit in _gas_pairs(what, txs, rules):
            a, b = ru.receipt, ro.receipt
            assert (a.success, a.storage_delta, a.logs) == (b.success, b.storage_delta, b.logs), spec
            if spec.method != "constructor":
                assert a.return_data == b.return_data, spec
            if not a.success:
                continue
            for r in (ru, ro):
                assert r.receipt.gas_used <= r.outcomes["minic"].gas
                bound_checks += 1
            cases += 1
            if hit:
                strict += 1
                assert b.gas_used < a.gas_used, spec
            else:
                assert b.gas_used == a.gas_used, spec
    assert strict > 0
    return f"{bound_checks} bound checks, {cases} opt/unopt pairs, {strict} strict"


# ---------------------------------------------------------------- criterion 4

@pytest.mark.derived
@criterion(4, "gas-sum invariant at every Methodical synchronization point")
def test_gas_sum_invariant():
    art = compiled("token", True)
    owner, dest = DEFAULT_SENDERS[0], DEFAULT_SENDERS[1]
    addr = create_address(owner, 0)
    bal = {a: START_BALANCE for a in DEFAULT_SENDERS}
    dep = lockstep(art, "constructor", [], {}, MachineEnv(addr, owner, 0, 0, dict(bal)),
                   gas_limit=1_000_000, check_store="every")
    assert dep.ok, dep.failures[:3]
    from minicevm.pipeline.driver import run_phase
    st = run_phase(art, "methodical", {}, MachineEnv(addr, owner, 0, 0, dict(bal)), "constructor").storage
    tr = lockstep(art, "transfer", [dest, 25], st, MachineEnv(addr, owner, 0, 0, dict(bal)),
                  gas_limit=200_000, check_store="every")
    assert tr.ok, tr.failures[:3]
    assert dep.gas_checks > 0 and tr.gas_checks > 0
    return f"{dep.gas_checks + tr.gas_checks} checkpoints, all exact"


# ---------------------------------------------------------------- criterion 5

def _random_window(rng) -> list:
    kinds = ["PUSH", "DUP", "SWAP", "POP", "ISZERO", "NOT", "ADD", "SUB", "MUL", "DIV", "MOD",
             "LT", "GT", "EQ", "AND", "OR", "XOR"]
    out = []
    for _ in range(rng.randint(0, 24)):
        k = rng.choice(kinds)
        if k == "PUSH":
            out.append(Tok(k, rng.choice((0, 1, 2, 7, 2 ** 256 - 1, rng.getrandbits(256)))))
        elif k in ("DUP", "SWAP"):
            out.append(Tok(k, rng.randint(1, 4)))
        else:
            out.append(Tok(k))
    return [statement(t) for t in out]


@pytest.mark.derived
@criterion(5, "peephole rules sound, unsound rule caught, optimize terminates")
def test_peephole_soundness():
    rules = read_rules()
    texts = {r.name for r in rules}
    assert "DUP1 SWAP1 => DUP1" in texts and "PUSH 0 ADD =>" in texts
    results = check_rules(rules)
    bad = [r.summary() for r in results if not r.ok]
    assert not bad, bad
    assert all(r.samples >= 10_000 for r in results)

    unsound = parse_rule("SWAP1 SUB => SUB")
    res = check_rule(unsound)
    assert not res.sound and res.counterexample
    with pytest.raises(RuleUnsound) as ei:
        import tempfile
        with tempfile.NamedTemporaryFile("w", suffix=".rules", delete=False) as fh:
            fh.write("PUSH 0 ADD =>\nSWAP1 SUB => SUB\n")
        load_rules(fh.name)
    assert "SWAP1 SUB" in str(ei.value)

    rng = random.Random(5)
    rewrites = 0
    for _ in range(10_000):
        code = _random_window(rng)
        rep = OptReport()
        out = optimize(code, rules, rep, limit=len(code) + 1)
        gas0 = sum(tok_gas(token(s)) for s in code)
        gas1 = sum(tok_gas(token(s)) for s in out)
        assert all(site[3] > 0 for site in rep.sites)
        assert gas0 - gas1 == sum(site[3] for site in rep.sites)
        rewrites += rep.total
    return (f"{len(results)} rules proved/tested, unsound rule rejected, "
            f"10^4 programs terminated after {rewrites} rewrites")


# ---------------------------------------------------------------- criterion 6

def wide_program() -> str:
    lets = "\n".join(f"    let a{i} = x + {i} in" for i in range(14))
    s = " + ".join(f"a{i}" for i in range(14))
    more = "\n".join(f"    let b{i} = s + {i} in" for i in range(5))
    body = f"  let f (x) =\n{lets}\n    let s = {s} in\n{more}\n    b0 + b1 + b2 + b3 + b4"
    return contract(body, "  f : int -> int;")


def max_live(g) -> int:
    live_in = cgraph.liveness(g)
    out = cgraph.live_out(g, live_in)
    return max(len(v) for v in list(live_in.values()) + list(out.values()))


@pytest.mark.derived
@criterion(6, "register allocation: 15-wide fits, 16 live temps do not")
def test_register_allocation_limit():
    art = compile_program(wide_program())
    g = art.cgraph.functions["f"]
    ntemps = len(art.minic.functions["f"].temps)
    assert ntemps >= 20
    assert max_live(g) <= 15
    chain = Chain({DEFAULT_SENDERS[0]: START_BALANCE})
    addr = chain.deploy(art).contract_address
    r = chain.call(addr, art, "f", [1])
    expect = 5 * sum(1 + i for i in range(14)) + sum(range(5))
    assert r.success and int.from_bytes(r.return_data, "big") == expect

    deep = contract(f"  let f (x) =\n{chain_of_lets(15)}", "  f : int -> int;")
    with pytest.raises(StackTooDeep):
        compile_program(deep)
    return f"{ntemps} temps with max 15 live compile and return {expect}; 16 live raise StackTooDeep"


# ---------------------------------------------------------------- criterion 7

@pytest.mark.derived
@criterion(7, "crowdfunding scenario on bytecode matches the reference")
def test_crowdfunding_scenario():
    art = compiled("crowdfunding", True)
    txs = script("crowdfunding")
    s = Session(art, IR_PHASES)
    results = [s.run(t) for t in txs]
    divs = [d for r in results for d in r.divergences]
    assert not divs, [str(d) for d in divs[:3]]
    first, again, late = results[1], results[2], results[6]
    assert (first.spec.method, again.spec.method, late.spec.method) == ("donate",) * 3
    assert again.spec.sender == first.spec.sender
    assert first.spec.block <= 100 < late.spec.block
    assert first.receipt.success and first.outcomes["minic"].success
    assert again.receipt.status == "revert" and not again.outcomes["minic"].success
    assert late.receipt.status == "revert" and not late.outcomes["minic"].success
    return "donate ok, repeat donate reverts, late donate reverts; 0 divergences"


# ---------------------------------------------------------------- criterion 8

@pytest.mark.derived
@criterion(8, "assembler round trip and decoding from every boundary")
def test_assembler_round_trip():
    checked = 0
    for name in NAMES:
        for opt in (False, True):
            art = compiled(name, opt)
            m = art.methodical
            for code, asm, rt_len, seg in ((m.runtime, art.runtime, 0, methodical.RUNTIME),
                                           (m.constructor, art.constructor, len(art.runtime_code),
                                            methodical.CONSTRUCTOR)):
                labels, _, total = build_label_map(code)
                lay = Layout(labels, rt_len, total, methodical.revert_label(seg))
                insts = [i for s in code for i in image(s, lay)]
                assert assemble_insts(insts) == asm.code
                assert disassemble(asm.code) == insts
                pc = 0
                for k, i in enumerate(insts):
                    assert code_from_counter(asm.code, pc) == insts[k:]
                    pc += i.size
                    checked += 1
    return f"{checked} instruction boundaries"


# ---------------------------------------------------------------- criterion 9

@pytest.mark.derived
@criterion(9, "out-of-gas reruns fail safely while the reference completes")
def test_out_of_gas_safety():
    total = 0
    for name in NAMES:
        art = compiled(name, True)
        res = out_of_gas_run(art, script(name))
        assert res
        for r in res:
            assert r.gas_limit == math.ceil(r.gas_used / 2)
            assert r.ok, r
        total += len(res)
    return f"{total} transactions rerun at half gas"


if __name__ == "__main__":
    tests = [test_token_balance_sum, lambda: test_differential_corpus_and_fuzz(_fuzz_corpus()),
             None, test_gas_sum_invariant, test_peephole_soundness, test_register_allocation_limit,
             test_crowdfunding_scenario, test_assembler_round_trip, test_out_of_gas_safety]
    corpus = _fuzz_corpus()
    tests[1] = lambda: test_differential_corpus_and_fuzz(corpus)
    tests[2] = lambda: test_gas_inequalities(corpus)
    for t in tests:
        try:
            t()
        except Exception:
            pass
    for n in sorted(helpers.ACCEPTANCE):
        ok, title, detail = helpers.ACCEPTANCE[n]
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}  ({detail})")
