"""Command-line front end: verify, rep, numeric, stackel, diff.

Every run writes one deterministic JSON report.  Exit status: 0 when all
checks pass, 1 when any check fails, 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

SCHEMA_VERSION = 1
STANDARD_PQ = ((1, 1), (1, 2), (2, 1), (1, 3), (3, 1), (2, 3), (3, 2))
ENV_OUT_DIR = "SUPERINT_OUT_DIR"

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config file: "key = value" lines, '#' comments


CONFIG_KEYS = {
    "system", "p", "q", "pairs", "tol", "points", "seed", "out", "jobs", "M", "a", "b", "omega",
    "a1", "a2", "mu", "p0", "q0", "no_l5", "matrices", "csv", "chain_tol",
}


def read_config(path: str) -> Dict[str, str]:
    out: Dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as e:
        raise ConfigError(f"{path}: cannot read config: {e.strerror}") from None
    for no, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{no}: expected 'key = value', got {raw.strip()!r}")
        key, val = (x.strip() for x in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{no}: unknown key {key!r}")
        if not val:
            raise ConfigError(f"{path}:{no}: empty value for {key!r}")
        out[key] = val
    return out


def _frac(text: str, what: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"{what}: not a rational number: {text!r}") from None


def _int(text, what: str) -> int:
    try:
        return int(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{what}: not an integer: {text!r}") from None


def _float(text, what: str) -> float:
    try:
        return float(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{what}: not a number: {text!r}") from None


# ---------------------------------------------------------------------------
# jobs (module level so they pickle)


def _systems(text: str) -> List[str]:
    from .systems import SYSTEM_IDS, UnsupportedSystem, canonical_id

    if text == "all":
        return ["sphere", "complex_euclidean", "caged", "ttw"]
    out = []
    for part in text.split(","):
        try:
            out.append(canonical_id(part.strip()))
        except (UnsupportedSystem, KeyError, ValueError):
            raise ConfigError(f"unknown system {part!r}; known: {', '.join(SYSTEM_IDS)}") from None
    return out


def _pairs(opts) -> List[Tuple[int, int]]:
    if opts.get("pairs") == "standard":
        pairs = list(STANDARD_PQ)
    elif opts.get("pairs"):
        pairs = []
        for item in opts["pairs"].split(","):
            bits = item.strip().split("/")
            if len(bits) != 2:
                raise ConfigError(f"pairs: expected p/q items, got {item!r}")
            pairs.append((_int(bits[0], "pairs"), _int(bits[1], "pairs")))
    else:
        pairs = [(_int(opts.get("p", 1), "p"), _int(opts.get("q", 1), "q"))]
    for p, q in pairs:
        if p < 1 or q < 1 or math.gcd(p, q) != 1:
            raise ConfigError(f"(p,q)=({p},{q}) must be coprime positive integers")
    return pairs


def _verify_job(system: str, p: int, q: int, with_l5: bool) -> Tuple[dict, bool]:
    from .structure import verify

    rep = verify(system, p, q, with_L5=with_l5 and system in ("ttw", "kepler"))
    return rep.to_json(), rep.ok


def _stackel_job(p: int, q: int) -> Tuple[dict, bool]:
    from .structure import stackel_map, verify

    res = stackel_map(verify("ttw", p, q, with_L5=False))
    return res.to_json(), res.ok


def _run_jobs(fn, args: Sequence[tuple], jobs: int) -> List[Tuple[dict, bool]]:
    if jobs <= 1 or len(args) <= 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        futures = [ex.submit(fn, *a) for a in args]
        return [f.result() for f in futures]  # submission order, so output is deterministic


# ---------------------------------------------------------------------------
# commands


def cmd_verify(opts) -> Tuple[dict, bool]:
    systems = _systems(opts.get("system", "all"))
    pairs = _pairs(opts)
    args = [(s, p, q, not opts.get("no_l5")) for s in systems for p, q in pairs]
    results = _run_jobs(_verify_job, args, _int(opts.get("jobs", 1), "jobs"))
    return {"results": [r for r, _ in results]}, all(ok for _, ok in results)


def cmd_stackel(opts) -> Tuple[dict, bool]:
    pairs = _pairs(opts)
    results = _run_jobs(_stackel_job, pairs, _int(opts.get("jobs", 1), "jobs"))
    return {"results": [r for r, _ in results]}, all(ok for _, ok in results)


def cmd_rep(opts) -> Tuple[dict, bool]:
    from .reps import PARAM_NAMES, DegenerateParameters, InadmissibleOffsets, build_rep, check_rep
    from .structure import verify_structure
    from .systems import build_model

    systems = _systems(opts.get("system", "caged"))
    if len(systems) != 1 or systems[0] not in PARAM_NAMES:
        raise ConfigError(f"rep needs one of: {', '.join(PARAM_NAMES)}")
    system = systems[0]
    (p, q), = _pairs(opts)[:1]
    params = {}
    for name in PARAM_NAMES[system]:
        if name not in opts:
            raise ConfigError(f"rep --system {system} needs --{name}")
        params[name] = _frac(opts[name], name)
    M = _int(opts.get("M", 2), "M")
    p0, q0 = _int(opts.get("p0", 0), "p0"), _int(opts.get("q0", 0), "q0")
    if M < 0:
        raise ConfigError("M must be nonnegative")
    model = build_model(system, p, q)
    report = verify_structure(model, with_L5=False)
    try:
        rep = build_rep(model, params, p0, q0, M, report)
    except (DegenerateParameters, InadmissibleOffsets) as e:
        raise ConfigError(str(e)) from None
    chk = check_rep(rep, report)
    body = chk.to_json()
    if opts.get("matrices"):
        body["representation"] = rep.to_json(with_matrices=True)
    if opts.get("csv"):
        _write_csv(opts["csv"], rep.spectra_table())
    ok = chk.ok and rep.energy_matches() and rep.spectrum_matches()
    return {"results": [body]}, ok


def _write_csv(path: str, rows: List[dict]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0].keys()) if rows else ["N"])
        w.writeheader()
        w.writerows(rows)


def cmd_numeric(opts) -> Tuple[dict, bool]:
    from .numerics import CHAIN_TOL, run_suite

    tol = _float(opts.get("tol", 1e-10), "tol")
    points = _int(opts.get("points", 16), "points")
    if points < 16:
        raise ConfigError("points must be at least 16")
    seed = _int(opts.get("seed", 12345), "seed")
    chain_tol = _float(opts.get("chain_tol", CHAIN_TOL), "chain_tol")
    res = run_suite(tol=tol, n_points=points, seed=seed, chain_tol=chain_tol)
    return {"numeric": [r.to_json() for r in res]}, all(r.passed for r in res)


COMMANDS = {"verify": cmd_verify, "rep": cmd_rep, "numeric": cmd_numeric, "stackel": cmd_stackel}


# ---------------------------------------------------------------------------
# report diff


class SchemaMismatch(ValueError):
    pass


def _label(item, i: int) -> str:
    if isinstance(item, dict):
        for key in ("name", "identity", "system"):
            if key in item:
                extra = f",p={item['p']},q={item['q']}" if key == "system" and "p" in item else ""
                return f"[{i}:{item[key]}{extra}]"
    return f"[{i}]"


def _walk(a, b, path: str, out: List[str]):
    if isinstance(a, dict) and isinstance(b, dict):
        for k in sorted(set(a) | set(b)):
            sub = f"{path}.{k}" if path else k
            if k not in a:
                out.append(f"+ {sub}: {json.dumps(b[k], sort_keys=True)}")
            elif k not in b:
                out.append(f"- {sub}: {json.dumps(a[k], sort_keys=True)}")
            else:
                _walk(a[k], b[k], sub, out)
    elif isinstance(a, list) and isinstance(b, list):
        for i in range(max(len(a), len(b))):
            if i >= len(a):
                out.append(f"+ {path}{_label(b[i], i)}: {json.dumps(b[i], sort_keys=True)}")
            elif i >= len(b):
                out.append(f"- {path}{_label(a[i], i)}: {json.dumps(a[i], sort_keys=True)}")
            else:
                _walk(a[i], b[i], path + _label(a[i], i), out)
    elif a != b:
        out.append(f"~ {path}: {json.dumps(a)} -> {json.dumps(b)}")


def diff_reports(old: dict, new: dict) -> List[str]:
    """Key-ordered structural diff; empty for identical reports."""
    va, vb = old.get("schema_version"), new.get("schema_version")
    if va is None or va != vb:
        raise SchemaMismatch(f"schema_version {va!r} vs {vb!r}")
    out: List[str] = []
    _walk(old, new, "", out)
    return out


# ---------------------------------------------------------------------------
# entry point


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="superint", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="key = value file; flags override it")
        sp.add_argument("--system")
        sp.add_argument("-p", type=int)
        sp.add_argument("-q", type=int)
        sp.add_argument("--pairs", help="'standard' or a list like 1/2,3/2")
        sp.add_argument("--out", help="report path (default: $%s/<name>.json or stdout)" % ENV_OUT_DIR)
        sp.add_argument("--jobs", type=int)
        sp.add_argument("--tol", type=float)
        sp.add_argument("--points", type=int)
        sp.add_argument("--seed", type=int)

    for name in ("verify", "stackel", "numeric"):
        sp = sub.add_parser(name)
        common(sp)
        if name == "verify":
            sp.add_argument("--no-l5", dest="no_l5", action="store_true", default=None)
        if name == "numeric":
            sp.add_argument("--chain-tol", dest="chain_tol", type=float)
    sp = sub.add_parser("rep")
    common(sp)
    sp.add_argument("-M", type=int)
    for x in ("a", "b", "omega", "a1", "a2", "mu"):
        sp.add_argument(f"--{x}")
    sp.add_argument("--p0", type=int)
    sp.add_argument("--q0", type=int)
    sp.add_argument("--matrices", action="store_true", default=None)
    sp.add_argument("--csv", help="also write the spectrum table as CSV")
    sp = sub.add_parser("diff")
    sp.add_argument("old")
    sp.add_argument("new")
    return ap


def _default_name(command: str, opts: dict) -> str:
    bits = [command]
    if opts.get("system"):
        bits.append(opts["system"].replace(",", "+"))
    if opts.get("pairs"):
        bits.append(opts["pairs"].replace("/", "-").replace(",", "_"))
    elif command != "numeric":
        bits.append(f"{opts.get('p', 1)}-{opts.get('q', 1)}")
    return "_".join(bits) + ".json"


def dump(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = _parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    if ns.command == "diff":
        try:
            with open(ns.old, encoding="utf-8") as fa, open(ns.new, encoding="utf-8") as fb:
                lines = diff_reports(json.load(fa), json.load(fb))
        except (OSError, json.JSONDecodeError, SchemaMismatch) as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_CONFIG
        for line in lines:
            print(line)
        return EXIT_FAIL if lines else EXIT_OK

    try:
        opts: Dict[str, str] = read_config(ns.config) if ns.config else {}
        for k, v in vars(ns).items():
            if k in ("command", "config") or v is None:
                continue
            opts[k] = v if isinstance(v, bool) else str(v)
        for flag in ("no_l5", "matrices"):
            if isinstance(opts.get(flag), str):
                opts[flag] = opts[flag].lower() in ("1", "true", "yes")
        body, ok = COMMANDS[ns.command](opts)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as e:  # raised by model construction on bad input
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    config = {k: (v if isinstance(v, bool) else str(v)) for k, v in sorted(opts.items())
              if k not in ("out", "jobs", "csv")}
    report = {"schema_version": SCHEMA_VERSION, "command": ns.command, "config": config,
              "status": "pass" if ok else "fail"}
    report.update(body)
    text = dump(report)
    out = opts.get("out")
    if not out and os.environ.get(ENV_OUT_DIR):
        out = os.path.join(os.environ[ENV_OUT_DIR], _default_name(ns.command, opts))
    try:
        if out:
            os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
            with open(out, "w", encoding="utf-8") as fh:
                fh.write(text)
            print(f"{ns.command}: {'pass' if ok else 'FAIL'} -> {out}", file=sys.stderr)
        else:
            sys.stdout.write(text)
    except OSError as e:
        print(f"error: cannot write report: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
