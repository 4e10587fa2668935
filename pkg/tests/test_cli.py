import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

import minicevm.examples
from helpers import chain_of_lets, contract
from minicevm.cli import main
from minicevm.evm.keccak import keccak256

EXAMPLES = Path(minicevm.examples.__file__).parent
TOKEN = str(EXAMPLES / "token.ds")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def json_lines(text):
    return [json.loads(l) for l in text.splitlines() if l.strip()]


@pytest.mark.trivial
def test_compile_writes_artifacts(tmp_path, capsys):
    code, out, _ = run(capsys, "compile", TOKEN, "-O", "--out-dir", str(tmp_path),
                       "--emit", "cgraph", "--emit", "evm", "--opt-report")
    assert code == 0
    names = {p.name for p in tmp_path.iterdir()}
    assert names == {"token.runtime.hex", "token.deploy.hex", "token.srcmap.json", "token.abi.json",
                     "token.vcs.jsonl", "token.cgraph.json", "token.evm.json", "token.opt.json"}
    rt = (tmp_path / "token.runtime.hex").read_text().strip()
    assert rt.startswith("0x") and rt == rt.lower()
    dep = (tmp_path / "token.deploy.hex").read_text().strip()
    assert dep.endswith(rt[2:])
    ir = json.loads((tmp_path / "token.cgraph.json").read_text())
    assert (ir["format"], ir["version"], ir["phase"]) == ("minicevm-ir", 1, "cgraph")
    assert json.loads(out) == json.loads((tmp_path / "token.opt.json").read_text())
    abi = json.loads((tmp_path / "token.abi.json").read_text())
    assert {"name": "transfer", "signature": "transfer(address,uint256)", "selector": "0xa9059cbb",
            "returns": True} in abi
    assert len((tmp_path / "token.vcs.jsonl").read_text().splitlines()) == 5


@pytest.mark.derived
def test_opt_report_counts_fired_rules(tmp_path, capsys):
    code, out, _ = run(capsys, "compile", str(EXAMPLES / "amm.ds"), "-O", "--opt-report",
                       "--out-dir", str(tmp_path))
    rep = json.loads(out)
    assert code == 0 and rep["version"] == 1
    assert rep["total"] == sum(r["fired"] for r in rep["rules"]) == sum(rep["functions"].values())
    assert rep["total"] > 0 and rep["gas_saved"] == sum(r["gas_saved"] for r in rep["rules"])


@pytest.mark.trivial
def test_compile_is_byte_for_byte_deterministic(tmp_path, capsys):
    for d in ("a", "b"):
        assert run(capsys, "compile", TOKEN, "-O", "--out-dir", str(tmp_path / d))[0] == 0
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


@pytest.mark.trivial
def test_check_passes_on_example(capsys):
    code, out, _ = run(capsys, "check", TOKEN, "-O")
    assert code == 0
    rep = json.loads(out)
    assert rep["ok"] and rep["divergences"] == [] and rep["transactions"] > 0


@pytest.mark.trivial
def test_fuzz_is_deterministic_per_seed(capsys):
    a = run(capsys, "check", "--fuzz", "8", "--seed", "7", "-O")
    b = run(capsys, "check", "--fuzz", "8", "--seed", "7", "-O")
    assert a[0] == 0 and a[1] == b[1]
    assert json.loads(a[1])["programs"] == 8


@pytest.mark.trivial
def test_unsound_rule_file_is_rejected(tmp_path, capsys):
    rules = tmp_path / "bad.rules"
    rules.write_text("SWAP1 SUB => SUB\n")
    code, _, err = run(capsys, "compile", TOKEN, "--rules", str(rules), "--out-dir", str(tmp_path))
    assert code == 1 and "SWAP1 SUB => SUB" in err and "RuleUnsound" in err


@pytest.mark.derived
def test_disasm(capsys):
    code, out, _ = run(capsys, "disasm", "0x6002600301")
    assert code == 0
    assert out.splitlines() == ["0000 PUSH1 0x02", "0002 PUSH1 0x03", "0004 ADD"]


@pytest.mark.trivial
@pytest.mark.parametrize("bad", ["0x600", "zz", "60 0g"])
def test_malformed_hex(capsys, bad):
    code, _, err = run(capsys, "disasm", bad)
    assert code == 1 and "hex" in err


@pytest.mark.paper
def test_run_balance_of_deployer(capsys):
    code, out, _ = run(capsys, "run", TOKEN, "balanceOf", "0xa11ce")
    assert code == 0
    rc = json.loads(out)
    assert rc["success"] and int(rc["return_data"], 16) == 100000


@pytest.mark.paper
def test_run_reference_transfer_and_state_out(tmp_path, capsys):
    snap = tmp_path / "s.json"
    code, out, _ = run(capsys, "run", TOKEN, "transfer", "0xb0b", "400", "--ref",
                       "--state-out", str(snap))
    assert code == 0
    o = json.loads(out)
    assert o["format"] == "minicevm-outcome" and o["success"] and o["value"] == 1
    code, out, _ = run(capsys, "run", TOKEN, "balanceOf", "0xb0b", "--phase", "stacked",
                       "--state", str(snap))
    assert json.loads(out)["value"] == 400


@pytest.mark.trivial
def test_trace_lines_precede_the_result(capsys):
    code, out, _ = run(capsys, "run", TOKEN, "totalSupply", "--phase", "cgraph", "--trace")
    lines = json_lines(out)
    assert code == 0 and len(lines) > 2
    assert all(set(l) == {"gas", "state"} and "type" in l["state"] for l in lines[:-1])
    gas = [l["gas"] for l in lines[:-1]]
    assert gas == sorted(gas)
    assert lines[-1]["value"] == 100000

    code, out, _ = run(capsys, "run", TOKEN, "totalSupply", "--trace")
    lines = json_lines(out)
    assert {"pc", "op", "gas", "stack"} <= set(lines[0])
    assert lines[-1]["success"]


@pytest.mark.derived
def test_evm_run_with_tx_file(tmp_path, capsys):
    # SLOAD slot 0, add 1, return it
    tx = tmp_path / "tx.json"
    tx.write_text(json.dumps({"storage": {"0x0": "41"}, "calldata": "0x"}))
    code, out, _ = run(capsys, "evm-run", "600054600101" "60005260206000f3", "--tx", str(tx))
    rc = json.loads(out)
    assert code == 0 and int(rc["return_data"], 16) == 42
    # five PUSH1, SLOAD, ADD, MSTORE with one word of memory, RETURN
    assert rc["gas_used"] == 21000 + 5 * 3 + 200 + 3 + (3 + 3) + 0


@pytest.mark.derived
def test_evm_run_signature_encodes_call(tmp_path, capsys):
    tx = tmp_path / "tx.json"
    tx.write_text(json.dumps({"signature": "f(uint256)", "args": [5]}))
    # return calldata word 0 (the selector, left-aligned)
    code, out, _ = run(capsys, "evm-run", "60003560005260206000f3", "--tx", str(tx))
    sel = keccak256(b"f(uint256)") >> 224
    assert int(json.loads(out)["return_data"], 16) == sel << 224


@pytest.mark.trivial
def test_stack_too_deep_is_a_user_error(tmp_path, capsys):
    src = tmp_path / "deep.ds"
    src.write_text(contract(f"  let f (x) =\n{chain_of_lets(15)}", "  f : int -> int;"))
    code, _, err = run(capsys, "compile", str(src), "--out-dir", str(tmp_path))
    assert code == 1 and "StackTooDeep" in err


@pytest.mark.trivial
def test_syntax_error_and_missing_file(tmp_path, capsys):
    src = tmp_path / "bad.ds"
    src.write_text("object {")
    assert run(capsys, "compile", str(src), "--out-dir", str(tmp_path))[0] == 1
    assert run(capsys, "compile", str(tmp_path / "nope.ds"))[0] == 1
    assert run(capsys, "frobnicate")[0] == 1


@pytest.mark.trivial
@pytest.mark.skipif(shutil.which("minicevm") is None, reason="console script not installed")
def test_console_script(tmp_path):
    r = subprocess.run(["minicevm", "disasm", "00"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip() == "0000 STOP"


@pytest.mark.trivial
def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "minicevm.cli", "disasm", "0x01"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip() == "0000 ADD"
