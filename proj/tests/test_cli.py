#!/usr/bin/env python3
"""End-to-end checks of the fslab command line tool.

Usage: test_cli.py <fslab-binary> <fixtures-dir>
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

BIN = Path(sys.argv[1]).resolve()
FIX = Path(sys.argv[2]).resolve()

failures = []


def run(*args, cwd=FIX):
    return subprocess.run([str(BIN), *args], capture_output=True, text=True, cwd=cwd)


def check(name, cond, detail=""):
    status = "ok" if cond else "FAIL"
    print(f"{status:4} {name}" + (f"  ({detail})" if detail and not cond else ""))
    if not cond:
        failures.append(name)


def jout(proc):
    try:
        return json.loads(proc.stdout)
    except json.JSONDecodeError:
        return None


# validation of good and bad instances
p = run("validate", "z2_twisted.json")
r = jout(p)
check("validate twisted action", p.returncode == 0 and r and r["issues"] == [], p.stdout)

p = run("validate", "groupoid_z2.json")
r = jout(p)
check("validate groupoid", p.returncode == 0 and r and r["kind"] == "groupoid")

p = run("validate", "action_bad_cocycle.json")
r = jout(p)
check(
    "broken cocycle rejected with a named arrow pair",
    p.returncode == 2 and r and any("u(1,1)" in s for s in r["issues"]),
    p.stdout,
)

p = run("validate", "corr_identity_z2twisted.json")
check("validate correspondence", p.returncode == 0, p.stdout + p.stderr)

# algebra reports
p = run("build", "klein4_twisted.json")
r = jout(p)
check("klein four algebra is one 2x2 block", r and r["blocks"] == [{"size": 2}], p.stdout)

p = run("build", "pair3_trivial.json")
r = jout(p)
check("pair groupoid algebra is one 3x3 block", r and r["blocks"] == [{"size": 3}], p.stdout)

# norms of a section
p = run("norm", "z2_trivial.json", "section_z2.json")
r = jout(p)
check(
    "section norms",
    r
    and abs(r["norms"]["sup"] - 1.0) < 1e-12
    and abs(r["norms"]["reduced"] - 1.3462912017836262) < 1e-9,
    p.stdout,
)

p = run("norm", "z2_trivial.json", "section_z2.json", "--format", "csv")
check(
    "csv norm table",
    p.returncode == 0
    and p.stdout.splitlines()[0] == "name,value"
    and any(line.startswith("norms.sup,") for line in p.stdout.splitlines()),
    p.stdout,
)

p = run("pd", "mult_half_z2.json", "--format", "csv")
check("csv rejected outside norm tables", p.returncode == 4, p.stdout + p.stderr)

# positive definiteness
p = run("pd", "mult_half_z2.json")
r = jout(p)
check("half scalar multiplier is positive-definite", p.returncode == 0 and r and r["pd"] is True)

p = run("pd", "mult_two_z2.json")
r = jout(p)
check("doubling multiplier is not positive-definite", p.returncode == 0 and r and r["pd"] is False)

p = run("pd", "z2_trivial.json", "mult_half_z2.json")
r = jout(p)
check("explicit action form agrees", p.returncode == 0 and r and r["pd"] is True)

# dilation
with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "presentation.json"
    p = run("dilate", "mult_half_z2.json", "--out", str(out))
    r = jout(p)
    check(
        "dilation rank of the half scalar kernel",
        p.returncode == 0 and r and r["dilation"]["rank_per_unit"] == [2],
        p.stdout,
    )
    p = run("validate", str(out), "--tol", "1e-7")
    r = jout(p)
    check("dilation output validates", p.returncode == 0 and r and r["issues"] == [], p.stdout)

p = run("dilate", "mult_two_z2.json")
check("dilation refuses an indefinite multiplier", p.returncode == 2, p.stdout + p.stderr)

# norms of multipliers
p = run("fsnorm", "mult_identity_z2twisted.json")
r = jout(p)
check("identity multiplier has norm one", r and r["fs_norm"] == 1.0, p.stdout)

p = run("fsnorm", "mult_two_z2.json")
check("fsnorm refuses an indefinite multiplier", p.returncode == 2, p.stderr)

p = run("decnorm", "mult_two_z2.json")
r = jout(p)
check(
    "decomposable norm of the doubling multiplier",
    p.returncode == 0 and r and r["converged"] and abs(r["value"] - 2.0) < 2e-3,
    p.stdout,
)

# determinism: identical invocations give identical bytes
a = run("decnorm", "mult_two_z2.json", "--seed", "11")
b = run("decnorm", "mult_two_z2.json", "--seed", "11")
check("bit-identical reports under a fixed seed", a.stdout == b.stdout and a.stdout != "")

a = run("build", "two_orbit_mixed.json", "--seed", "3")
b = run("build", "two_orbit_mixed.json", "--seed", "3")
check("bit-identical build reports", a.stdout == b.stdout and a.stdout != "")

# haagerup reconstruction
with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "multiplier.json"
    p = run("haagerup", "map_identity_z2twisted.json", "--out", str(out))
    check("haagerup writes a multiplier", p.returncode == 0 and out.exists(), p.stderr)
    q = run("fsnorm", str(out))
    r = jout(q)
    check("identity map recovers the identity multiplier", r and r["fs_norm"] == 1.0,
          q.stdout + q.stderr)
    doc = json.loads(out.read_text())
    t1 = doc["T"]["1"]
    check("recovered unit coefficient", abs(t1[0][0][0] - 1.0) < 1e-12 and abs(t1[0][0][1]) < 1e-12)

# absorption residuals
p = run("absorb", "corr_identity_z2twisted.json")
r = jout(p)
check(
    "absorption residuals vanish",
    p.returncode == 0
    and r
    and max(
        r["right"]["unitary"],
        r["right"]["intertwine"],
        r["right"]["left_action"],
        r["left"]["unitary"],
        r["left"]["intertwine"],
        r["left"]["left_action"],
        r["fell"]["conjugation"],
    )
    < 1e-8,
    p.stdout,
)

# schema errors
with tempfile.TemporaryDirectory() as tmp:
    bad = Path(tmp) / "bad.json"
    bad.write_text('{"broken": 1}')
    p = run("validate", str(bad))
    check("unknown instance kind is a schema error", p.returncode == 4, p.stderr)

    bad.write_text('{"groupoid": {"arrows": 2}, "dims": [1]}')
    p = run("validate", str(bad))
    check(
        "missing groupoid fields are named",
        p.returncode == 4 and "units" in p.stderr,
        p.stderr,
    )

p = run("pd", "two_orbit_mixed.json", "mult_identity_z2twisted.json")
check(
    "shape mismatch names the offending entry",
    p.returncode == 4 and "T[0]" in p.stderr,
    p.stderr,
)

# human format
p = run("fsnorm", "mult_half_z2.json", "--format", "human")
check("human format", p.returncode == 0 and "fs_norm: 1.0" in p.stdout, p.stdout)

print()
if failures:
    print(f"{len(failures)} check(s) failed: {failures}")
    sys.exit(1)
print("all cli checks passed")
