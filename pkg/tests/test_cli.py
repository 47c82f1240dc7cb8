import json

import pytest

from ratproofs.cli import main
from ratproofs.corpus import generate_corpus, write_corpus


@pytest.fixture()
def files(tmp_path):
    out = {}
    for name, text in {
        "or": "inputs 2\ng1 = OR x1 x2\noutput g1\n",
        "xor": "inputs 2\ng1 = XOR x1 x2\noutput g1\n",
        "bad": "inputs 2\ng1 = OR x1 x9\noutput g1\n",
    }.items():
        p = tmp_path / f"{name}.txt"
        p.write_text(text)
        out[name] = str(p)
    p = tmp_path / "corpus.txt"
    p.write_text(write_corpus(generate_corpus(7, 6, 3)))
    out["corpus"] = str(p)
    return out


def _run(capsys, argv):
    code = main(argv)
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def test_pp_vote_or(capsys, files):
    code, out, err = _run(capsys, ["run", "--protocol", "pp-vote", "--instances", files["or"]])
    doc = json.loads(out)
    assert code == 0
    r = doc["results"][0]
    assert r["root_value"] == "3/2^2" and r["decision"] == 1
    assert "1/1 pass" in err


def test_tie_is_usage_error(capsys, files):
    code, out, err = _run(capsys, ["run", "--protocol", "pp-vote", "--instances", files["xor"]])
    assert code == 2 and out == "" and "TieNotAllowed" in err


def test_malformed_circuit(capsys, files):
    code, _, err = _run(capsys, ["run", "--protocol", "pp-vote", "--instances", files["bad"]])
    assert code == 2 and "error" in err


def test_missing_file(capsys, tmp_path):
    code, _, err = _run(capsys, ["run", "--protocol", "pp-vote", "--instances", str(tmp_path / "nope")])
    assert code == 2


def test_unknown_protocol(capsys, files):
    code, _, _ = _run(capsys, ["run", "--protocol", "nope", "--instances", files["or"]])
    assert code == 2


@pytest.mark.parametrize(
    "protocol", ["pp-vote", "brier-count", "one-bit", "pp-oracle-round", "compose", "knockout", "compare-exp"]
)
def test_protocols_pass_on_corpus(capsys, files, protocol):
    code, out, _ = _run(capsys, ["run", "--protocol", protocol, "--instances", files["corpus"]])
    assert code == 0, out
    assert json.loads(out)["passed"]


def test_elicit_on_one_instance(capsys, files):
    code, out, _ = _run(capsys, ["run", "--protocol", "elicit", "--instances", files["or"]])
    assert code == 0 and json.loads(out)["results"][0]["split_ok"]


def test_sabotage_fails(capsys, files):
    code, out, _ = _run(capsys, ["run", "--protocol", "compose", "--sabotage", "--instances", files["or"], "--instances", files["or"]])
    assert code == 1
    assert not json.loads(out)["passed"]


def test_audit_parity(capsys):
    assert _run(capsys, ["audit-parity", "--n", "3"])[0] == 0
    assert _run(capsys, ["audit-parity", "--n", "6", "--width", "3"])[0] == 1
    assert _run(capsys, ["audit-parity", "--n", "6", "--width", "3", "--expect-failure"])[0] == 0
    assert _run(capsys, ["audit-parity", "--n", "40"])[0] == 2
    assert _run(capsys, ["audit-parity", "--n", "3", "--width", "9"])[0] == 2


def test_audit_alpha(capsys):
    code, out, _ = _run(capsys, ["audit-parity", "--n", "6", "--alpha", "3/2^2", "--expect-failure"])
    doc = json.loads(out)
    assert doc["msg_bits"] == 5 and doc["note"].startswith("no claim")
    assert _run(capsys, ["audit-parity", "--n", "6", "--alpha", "1/2^1", "--width", "2"])[0] == 2


def test_audit_csv(capsys):
    code, out, _ = _run(capsys, ["audit-parity", "--n", "2", "--format", "csv"])
    assert code == 0 and out.startswith("section,key,values\n")


def test_gen_corpus_deterministic(capsys, tmp_path):
    a = _run(capsys, ["gen-corpus", "--seed", "5", "--count", "10", "--n", "4"])[1]
    b = _run(capsys, ["gen-corpus", "--seed", "5", "--count", "10", "--n", "4"])[1]
    assert a == b and a.startswith("truth:")
    assert _run(capsys, ["gen-corpus", "--n", "30"])[0] == 2


def test_out_file_and_workers_identical(capsys, files, tmp_path):
    texts = []
    for w in (1, 2, 8):
        p = tmp_path / f"r{w}.json"
        code = main(["run", "--protocol", "pp-oracle-round", "--instances", files["corpus"], "--workers", str(w), "--out", str(p)])
        assert code == 0
        texts.append(p.read_bytes())
    assert texts[0] == texts[1] == texts[2]


def test_run_csv(capsys, files):
    code, out, _ = _run(capsys, ["run", "--protocol", "pp-vote", "--instances", files["corpus"], "--format", "csv"])
    lines = out.splitlines()
    assert code == 0 and "root_value" in lines[0].split(",") and len(lines) == 7


def test_report(capsys, files, tmp_path):
    good, bad = tmp_path / "good.json", tmp_path / "bad.json"
    main(["run", "--protocol", "pp-vote", "--instances", files["or"], "--out", str(good)])
    main(["run", "--protocol", "compose", "--sabotage", "--instances", files["or"], "--instances", files["or"], "--out", str(bad)])
    capsys.readouterr()
    assert _run(capsys, ["report", str(good), str(good)])[0] == 0
    code, out, _ = _run(capsys, ["report", str(good), str(bad)])
    assert code == 1 and json.loads(out)["summary"] == "1/2 pass"
    assert _run(capsys, ["report"])[0] == 2
    junk = tmp_path / "junk.json"
    junk.write_text("{}")
    assert _run(capsys, ["report", str(junk)])[0] == 2


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    assert main([]) == 2
