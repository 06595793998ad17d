"""Exercises the CLI exit codes: 0 on success, 2 for configuration errors,
3 for data errors."""

import json
import pathlib
import subprocess
import sys
import tempfile


def run(cli, *args):
    return subprocess.run([cli, *args, "-q"], capture_output=True, text=True).returncode


def main(cli: str) -> int:
    failures = []

    def expect(label, got, want):
        status = "ok" if got == want else "MISMATCH"
        print(f"{label}: exit {got} (want {want}) {status}")
        if got != want:
            failures.append(label)

    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        good = tmp / "good.json"
        good.write_text(json.dumps({"seed": 3, "cohort": {"synth": {"n": 300}}}))
        expect("synth ok", run(cli, "synth", "--config", str(good), "--out", str(tmp / "synth")), 0)

        bad_key = tmp / "bad_key.json"
        bad_key.write_text(json.dumps({"seed": 3, "no_such_option": 1}))
        expect("unknown config key", run(cli, "run", "--config", str(bad_key), "--out", str(tmp / "x")), 2)

        no_seed = tmp / "no_seed.json"
        no_seed.write_text(json.dumps({"cohort": {"synth": {"n": 300}}}))
        expect("missing seed", run(cli, "run", "--config", str(no_seed), "--out", str(tmp / "y")), 2)

        expect("unknown flag", run(cli, "run", "--bogus"), 2)

        bad_csv = tmp / "cohort.csv"
        bad_csv.write_text("Age,label\nnot_a_number,1\n")
        schema = (pathlib.Path(__file__).resolve().parents[2] / "data" / "default_schema.json")
        file_cfg = tmp / "file.json"
        file_cfg.write_text(json.dumps({"seed": 3, "schema_path": str(schema), "cohort": {"path": str(bad_csv)}}))
        expect("malformed cohort", run(cli, "run", "--config", str(file_cfg), "--out", str(tmp / "z")), 3)

        expect("explain without a run", run(cli, "explain", "--out", str(tmp / "missing")), 3)

    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1]))
