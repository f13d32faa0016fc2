"""Command line surface: run experiment configs, verify, and demos.

Exit codes: 0 success, 1 verification failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import json
import sys
import tempfile
from pathlib import Path

from .errors import InputError
from .harness import parse_config, run_config_file, verify_suite

DEMOS = {
    "frequency-rez3": {
        "experiment": "frequency-scan",
        "family": {"functions": [{"n": 2, "h1": [[3, "cos", 1.0]], "h2": []}]},
        "region": {"ball": {"center": [0.0, 0.0], "radius": 0.8}},
        "params": {"r_lo": 0.05, "r_hi": 0.8, "r_count": 12},
        "output": {"format": "csv"},
    },
    "nodal-rez3": {
        "experiment": "nodal-measure",
        "family": {"functions": [{"n": 2, "h1": [[3, "cos", 1.0]], "h2": []}]},
        "region": {"ball": {"center": [0.0, 0.0], "radius": 0.5}},
        "params": {"grid_n": 1024},
        "output": {"format": "json"},
    },
    "partition-rez6": {
        "experiment": "partition-scan",
        "family": {"functions": [{"n": 2, "h1": [[6, "cos", 1.0]], "h2": []}]},
        "region": {"cube": {"center": [0.0, 0.0], "half_width": 0.4}},
        "params": {"A": 9, "axis": 1, "offset": 0.0, "rule": "contraction"},
        "output": {"format": "csv"},
    },
    "propagation-harmonic": {
        "experiment": "propagation",
        "family": {},
        "params": {"family_kind": "harmonic-sine", "m_values": [2, 3, 4, 5, 6],
                   "grid_n": 256},
        "output": {"format": "csv"},
    },
    "random-doubling": {
        "experiment": "doubling-scan",
        "seed": 7,
        "family": {"random": {"count": 3, "degree": 5}},
        "region": {"cube": {"center": [0.0, 0.0], "half_width": 0.2}},
        "params": {"samples": 3, "depth": 1},
        "output": {"format": "csv"},
    },
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nodal-lab",
        description="Frequency, doubling, nodal-measure and partition "
                    "experiments for biharmonic functions.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config (JSON)")
    p_run.add_argument("config", type=Path)

    p_verify = sub.add_parser("verify", help="run the acceptance suite")
    p_verify.add_argument("--level", choices=("fast", "full"), default="fast")
    p_verify.add_argument("--out-dir", type=Path, default=None)

    p_demo = sub.add_parser("demo", help="run a bundled demo experiment")
    p_demo.add_argument("name", nargs="?", choices=sorted(DEMOS), default=None)
    p_demo.add_argument("--out-dir", type=Path, default=Path("nodal-lab-out"))

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            paths = run_config_file(args.config)
            for p in paths:
                print(f"wrote {p}")
            return 0
        if args.command == "verify":
            summary = verify_suite(args.level, out_dir=args.out_dir)
            return 0 if summary["all_passed"] else 1
        if args.command == "demo":
            if args.name is None:
                print("available demos:")
                for name in sorted(DEMOS):
                    print(f"  {name}")
                return 0
            payload = dict(DEMOS[args.name])
            payload["output"] = dict(payload["output"],
                                     dir=str(args.out_dir / args.name))
            parse_config(payload)  # validate before writing anything
            with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
                json.dump(payload, fh)
                tmp = fh.name
            paths = run_config_file(tmp)
            Path(tmp).unlink()
            for p in paths:
                print(f"wrote {p}")
            return 0
    except (InputError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
