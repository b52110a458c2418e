#!/usr/bin/env python3
"""End-to-end checks of the CLI and of the files the plotting side reads.

usage: cli_outputs.py <diraclab binary> <source dir> <work dir> <case>
"""

import csv
import json
import shutil
import struct
import subprocess
import sys
from pathlib import Path

BIN, SRC, WORK, CASE = sys.argv[1], Path(sys.argv[2]), Path(sys.argv[3]), sys.argv[4]
CONFIGS = SRC / "configs"
HEADER = struct.Struct("<8sIIdIBBHdqdQ")  # 64 bytes


def run(*args, expect=0):
    p = subprocess.run([BIN, *map(str, args)], capture_output=True, text=True)
    if p.returncode != expect:
        sys.exit(f"{' '.join(map(str, args))}: exit {p.returncode}, expected {expect}\n{p.stdout}\n{p.stderr}")
    return p


def fresh(name):
    d = WORK / name
    shutil.rmtree(d, ignore_errors=True)
    d.mkdir(parents=True)
    return d


def snapshot(path):
    b = path.read_bytes()
    magic, n, N, L, ncomp, fourier, mean_zero, _, t, step, q0, h = HEADER.unpack_from(b)
    assert magic == b"DLSNAP01", magic
    assert len(b) == HEADER.size + ncomp * N**n * 16, (len(b), n, N, ncomp)
    pay = struct.unpack_from(f"<{2 * ncomp * N**n}d", b, HEADER.size)
    return dict(n=n, N=N, L=L, ncomp=ncomp, fourier=fourier, t=t, step=step, charge0=q0, hash=h, payload=pay)


def rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def case_simulate():
    d = fresh("simulate")
    run("--out-dir", d, "simulate", CONFIGS / "simulate.json")
    man = json.loads((d / "manifest.json").read_text())
    assert [c["verdict"] for c in man["criteria"]] == ["PASS", "PASS"], man["criteria"]
    s = snapshot(d / "final.snap")
    assert (s["n"], s["N"], s["L"], s["ncomp"]) == (2, 64, 64.0, 4), s
    assert s["step"] == 200 and abs(s["t"] - 10.0) < 1e-12, (s["step"], s["t"])
    assert f"{s['hash']:016x}" == man["config_hash"]
    ch = rows(d / "charge.csv")
    assert list(ch[0]) == ["step", "t", "charge", "rel_drift"]
    assert [int(r["step"]) for r in ch] == list(range(0, 201, 10))
    assert abs(float(ch[0]["charge"]) - s["charge0"]) == 0.0
    assert max(abs(float(r["rel_drift"])) for r in ch) <= 1e-9
    cps = sorted(p.name for p in (d / "checkpoints").iterdir())
    assert cps == [f"step_{k:010d}.snap" for k in (50, 100, 150, 200)], cps
    run("check-manifest", d / "manifest.json")
    man["config"]["eps"] = 3.0
    (d / "tampered.json").write_text(json.dumps(man))
    run("check-manifest", d / "tampered.json", expect=2)


def case_resume():
    a = fresh("resume-full")
    run("--out-dir", a, "simulate", CONFIGS / "simulate.json")
    b = WORK / "resume-cut"
    shutil.rmtree(b, ignore_errors=True)
    shutil.copytree(a, b)
    (b / "final.snap").unlink()
    for k in (150, 200):
        (b / "checkpoints" / f"step_{k:010d}.snap").unlink()
    (b / "manifest.json").unlink()
    # charge rows past the checkpoint are dropped on resume; pad with junk to prove it
    with open(b / "charge.csv", "a") as f:
        f.write("999,1,1,1\n")
    run("--out-dir", b, "simulate", CONFIGS / "simulate.json", "--resume")
    for rel in ("final.snap", "charge.csv", "checkpoints/step_0000000150.snap", "checkpoints/step_0000000200.snap"):
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), f"{rel} differs after resume"


def case_zero():
    d = fresh("zero")
    run("--out-dir", d, "simulate", CONFIGS / "simulate-zero.json")
    assert all(float(r["rel_drift"]) == 0.0 for r in rows(d / "charge.csv"))
    assert all(v == 0.0 for v in snapshot(d / "final.snap")["payload"])


def case_algebra_outputs():
    d = fresh("algebra")
    run("--out-dir", d, "verify-algebra")
    t = rows(d / "algebra.residuals.csv")
    assert list(t[0]) == ["identity", "max_residual", "tol", "samples", "pass"]
    assert all(r["pass"] == "1" for r in t) and len(t) == 7
    lines = [json.loads(x) for x in (d / "algebra.jsonl").read_text().splitlines()]
    assert len(lines) == 7 and all(isinstance(x["max_residual"], (int, float)) for x in lines)
    man = json.loads((d / "manifest.json").read_text())
    assert {c["id"] for c in man["criteria"]} == {r["identity"] for r in t}


def case_bilinear_n1():
    d = fresh("bilinear")
    p = run("--out-dir", d, "verify", "bilinear-l2", "--n", "1")
    assert "PASS" in p.stdout, p.stdout
    assert (d / "manifest.json").exists() and list(d.glob("*.csv"))


def case_usage_errors():
    d = fresh("usage")
    bad = json.loads((CONFIGS / "simulate.json").read_text())
    bad["grid"]["N"] = 48
    (d / "bad.json").write_text(json.dumps(bad))
    p = run("--out-dir", d, "simulate", d / "bad.json", expect=4)
    assert "$.grid.N" in p.stdout + p.stderr
    bad = {"kind": "simulate", "gird": {}}
    (d / "typo.json").write_text(json.dumps(bad))
    p = run("--out-dir", d, "simulate", d / "typo.json", expect=4)
    assert "$.gird" in p.stdout + p.stderr
    p = run("--out-dir", d, "verify", "no-such-id", expect=4)
    assert "bilinear-l2" in p.stdout + p.stderr
    run("--out-dir", d, "frobnicate", expect=4)


def case_dry_run():
    d = fresh("dry")
    for cfg in ("small-data.json", "mass-horizon.json", "null-gain.json"):
        p = run("--dry-run", "--out-dir", d, "campaign", CONFIGS / cfg)
        assert p.stdout.strip(), cfg
    assert not any(d.iterdir()), "dry run wrote files"


def case_schema():
    import jsonschema

    schema = json.loads((CONFIGS / "config.schema.json").read_text())
    for cfg in sorted(CONFIGS.glob("*.json")):
        if cfg.name != "config.schema.json":
            jsonschema.validate(json.loads(cfg.read_text()), schema)
    try:
        jsonschema.validate({"kind": "simulate", "gird": {}}, schema)
    except jsonschema.ValidationError:
        pass
    else:
        sys.exit("schema accepted an unknown key")


CASES = {k[5:]: v for k, v in globals().items() if k.startswith("case_")}

if __name__ == "__main__":
    WORK.mkdir(parents=True, exist_ok=True)
    CASES[CASE]()
    print(f"PASS {CASE}")
