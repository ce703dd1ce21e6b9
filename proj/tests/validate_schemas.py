#!/usr/bin/env python3
"""Validate shipped configs, attack scripts and --json reports against the
schemas in docs/, and check that repeated invocations give identical
reports once timing is removed.

usage: validate_schemas.py <upec_ssc> <source dir> <scratch dir>
Exits 77 (skipped) when jsonschema is not installed.
"""

import copy
import json
import os
import shutil
import subprocess
import sys
from pathlib import Path

try:
    import jsonschema
except ImportError:
    print("jsonschema not installed; skipping")
    sys.exit(77)


def strip_timing(report):
    r = copy.deepcopy(report)
    r.pop("timing", None)
    return r


def main():
    tool, src, work = sys.argv[1], Path(sys.argv[2]), Path(sys.argv[3])
    shutil.rmtree(work, ignore_errors=True)
    work.mkdir(parents=True)
    schemas = {name: json.loads((src / "docs" / f"{name}.schema.json").read_text())
               for name in ("config", "report", "attack")}
    validators = {}
    for name, schema in schemas.items():
        jsonschema.Draft7Validator.check_schema(schema)
        validators[name] = jsonschema.Draft7Validator(schema)
    failures = []

    def validate(kind, doc, what):
        errors = sorted(validators[kind].iter_errors(doc), key=lambda e: list(e.path))
        for e in errors[:5]:
            failures.append(f"{what}: {'/'.join(map(str, e.path))}: {e.message}")
        return not errors

    models = sorted(p for p in (src / "models").iterdir() if p.is_dir())
    for m in models:
        validate("config", json.loads((m / "config.json").read_text()), f"{m.name}/config.json")
        for a in sorted(m.glob("attack_*.json")):
            validate("attack", json.loads(a.read_text()), f"{m.name}/{a.name}")

    # The config schema must reject what the tool rejects.
    cfg = json.loads((src / "models" / "vulnerable" / "config.json").read_text())
    for mutate in (lambda c: c.update(bogus=1),
                   lambda c: c["victim_constraints"][0].update(cmp="lt"),
                   lambda c: c["invariants"][0].update(cycles=[0, 1]),
                   lambda c: c.pop("s_sys_patterns")):
        bad = copy.deepcopy(cfg)
        mutate(bad)
        if validators["config"].is_valid(bad):
            failures.append(f"config schema accepts an invalid config: {json.dumps(bad)[:120]}")
        path = work / "bad_config.json"
        path.write_text(json.dumps(bad))
        nl = src / "models" / "vulnerable" / "soc_vulnerable.nl"
        code = subprocess.run([tool, "check", str(nl), str(path)], capture_output=True).returncode
        if code != 1:
            failures.append(f"tool exit {code} on a config the schema rejects")

    false_inv = copy.deepcopy(cfg)
    false_inv["invariants"].append({"name": "timer_never_runs", "signal": "soc.timer.counter",
                                    "cmp": "eq", "value": 0})
    false_cfg = work / "false_invariant.json"
    false_cfg.write_text(json.dumps(false_inv))
    vuln_nl = str(src / "models" / "vulnerable" / "soc_vulnerable.nl")

    env = dict(os.environ)
    env.pop("UPEC_SSC_BUDGET", None)
    runs = []
    for m in models:
        runs.append((f"check {m.name}", ["check", "--json", str(m)]))
        runs.append((f"check --unrolled {m.name}", ["check", "--unrolled", "--json", str(m)]))
        runs.append((f"invariants {m.name}", ["invariants", "--json", str(m)]))
        for a in sorted(m.glob("attack_*.json")):
            scenario = a.stem[len("attack_"):]
            runs.append((f"demo {m.name} {scenario}",
                         ["demo", "--json", str(m), scenario, "-v", "2", "--baseline", "0"]))
    runs.append(("check with files", ["check", "--unrolled", "--json", "--dimacs-dir", "{out}/cnf",
                                      "--trace-dir", "{out}/vcd", "--log", "{out}/log.jsonl",
                                      str(src / "models" / "hwpe")]))
    runs.append(("check budget 0", ["check", "--json", "--budget", "0", str(src / "models" / "fixed")]))
    runs.append(("invariants false", ["invariants", "--json", "--trace-dir", "{out}/vcd", vuln_nl, str(false_cfg)]))

    for i, (what, args) in enumerate(runs):
        reports = []
        for rep in range(2):
            out = work / f"run{i:02d}_{rep}"
            argv = [tool] + [a.replace("{out}", str(out)) for a in args]
            proc = subprocess.run(argv, capture_output=True, text=True, env=env)
            if proc.returncode == 1:
                failures.append(f"{what}: exit 1\n{proc.stderr}")
                break
            try:
                report = json.loads(proc.stdout)
            except json.JSONDecodeError as e:
                failures.append(f"{what}: stdout is not JSON ({e})")
                break
            if not validate("report", report, what):
                break
            if "exit_code" in report and report["exit_code"] != proc.returncode:
                failures.append(f"{what}: report exit_code {report['exit_code']} but process exited {proc.returncode}")
            files = report.get("files", {})
            for p in files.get("traces", []) + files.get("dimacs", []) + ([files["log"]] if files.get("log") else []):
                if not Path(p).exists():
                    failures.append(f"{what}: reported file {p} does not exist")
            for inv in report.get("invariants", []):
                if inv["trace_file"] and not Path(inv["trace_file"]).exists():
                    failures.append(f"{what}: reported file {inv['trace_file']} does not exist")
            # Scratch paths differ between the two runs by construction.
            reports.append(json.loads(json.dumps(strip_timing(report)).replace(f"run{i:02d}_{rep}", "run")))
        if len(reports) == 2 and reports[0] != reports[1]:
            failures.append(f"{what}: reports differ between identical invocations")
        print(f"{what}: ok" if len(reports) == 2 and reports[0] == reports[1] else f"{what}: FAILED")

    logs = [work / f"run{len(runs) - 3:02d}_{rep}" / "log.jsonl" for rep in range(2)]
    if not all(p.exists() for p in logs) or logs[0].read_bytes() != logs[1].read_bytes():
        failures.append("iteration logs missing or different between identical invocations")

    for f in failures:
        print("FAIL:", f)
    print(f"{len(runs)} invocations validated, {len(failures)} problem(s)")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
