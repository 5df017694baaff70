"""Command-line interface.

    quasidecay shoot --N 3 --p 7 --find-dstar
    quasidecay structure-scan --N 3 --p 5 --workers 8
    quasidecay pohozaev --profile runs/<id>/vf.csv --N 3 --p 7
    quasidecay nondegeneracy --N 4 --p 5
    quasidecay slowdecay --lambda-ladder 0.2,0.1,0.05,0.025
    quasidecay reduce --potential gaussian --Lambda 10 --points 101
    quasidecay sweep --target shoot --axis p --values 6,7,8,9,10 --set find_dstar=true

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional, Sequence

from .config import NUMERIC_FIELDS, SUBCOMMANDS, load_config
from .errors import InvalidArgument, QuasiDecayError
from .harness import exit_code, run, sweep, write_sweep

log = logging.getLogger("quasidecay")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file; flags override its entries")
    p.add_argument("--N", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--workers", type=int)
    p.add_argument("-v", "--verbose", action="store_true")


def _shoot_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--r-max", dest="r_max", type=float)
    p.add_argument("--rel-tol", dest="rel_tol", type=float)
    p.add_argument("--abs-tol", dest="abs_tol", type=float)


def _profile_flag(p, required=False) -> None:
    p.add_argument("--profile", required=required, help="v_f profile CSV written by 'shoot --find-dstar'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quasidecay", description="Fast and slow decay of quasilinear ground states.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("shoot", help="shoot one height or bisect for the fast-decay height")
    _common(p)
    _shoot_flags(p)
    p.add_argument("--find-dstar", dest="find_dstar", action="store_const", const=True)
    p.add_argument("--d", type=float)

    p = sub.add_parser("structure-scan", help="classify a log grid of shooting heights")
    _common(p)
    _shoot_flags(p)
    p.add_argument("--d-min", dest="d_min", type=float)
    p.add_argument("--d-max", dest="d_max", type=float)
    p.add_argument("--d-points", dest="d_points", type=int)

    p = sub.add_parser("pohozaev", help="check the Pohozaev and energy identities on a profile")
    _common(p)
    _profile_flag(p)

    p = sub.add_parser("nondegeneracy", help="z0 decay diagnostic and mode checks")
    _common(p)
    _shoot_flags(p)
    _profile_flag(p)

    p = sub.add_parser("slowdecay", help="contraction construction along a lambda ladder")
    _common(p)
    p.add_argument("--lambda-ladder", dest="lambda_ladder")
    p.add_argument("--lam", type=float)
    p.add_argument("--sigma", type=float)

    p = sub.add_parser("reduce", help="reduced functional G(xi) and the error norm ladder")
    _common(p)
    _shoot_flags(p)
    _profile_flag(p)
    p.add_argument("--potential", choices=("gaussian", "inverse-power"))
    p.add_argument("--amplitude", type=float)
    p.add_argument("--scale", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--center", type=float)
    p.add_argument("--Lambda", type=float)
    p.add_argument("--points", type=int)
    p.add_argument("--xi", type=float)
    p.add_argument("--eps-ladder", dest="eps_ladder")

    p = sub.add_parser("sweep", help="repeat a subcommand over values of one numeric field")
    _common(p)
    p.add_argument("--target", required=True, choices=SUBCOMMANDS)
    p.add_argument("--axis", required=True, choices=NUMERIC_FIELDS)
    p.add_argument("--values", required=True, help="comma-separated values (may be empty)")
    p.add_argument("--set", dest="settings", action="append", default=[], metavar="KEY=VALUE")
    return parser


_NON_CONFIG = {"command", "config", "verbose", "target", "axis", "values", "settings"}


def _overrides(ns: argparse.Namespace) -> dict:
    out = {k: v for k, v in vars(ns).items() if k not in _NON_CONFIG and v is not None}
    for item in getattr(ns, "settings", []):
        if "=" not in item:
            raise InvalidArgument(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if ns.command == "sweep":
            overrides = _overrides(ns)
            workers = int(overrides.pop("workers", 1))
            values = [v.strip() for v in ns.values.split(",") if v.strip()]
            # the swept field may be required by validation, e.g. shoot --d
            if values:
                overrides.setdefault(ns.axis, values[0])
            base = load_config(ns.target, ns.config, overrides)
            results = sweep(ns.axis, values, base, workers=workers)
            where = write_sweep(results, ns.axis, base)
            failed = sum(r["status"] != "ok" for r in results)
            print(json.dumps({"sweep_dir": str(where), "points": len(results), "failed": failed}, sort_keys=True))
            return 0
        cfg = load_config(ns.command, ns.config, _overrides(ns))
        record = run(cfg)
        print(json.dumps({"run_id": record.run_id, "directory": record.directory, "outputs": record.headline()},
                         sort_keys=True))
        return 0
    except QuasiDecayError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
