"""Command-line interface: oracle queries, experiments, coefficient dumps.

Subcommands:

    oracle   print limit targets and condition margins for a chain
    run      execute a Monte Carlo experiment from a JSON config
    coeffs   dump (i, a_i) and (j, b_{n,j}) CSVs plus scaling diagnostics
    check    validate a config file without running anything

Exit codes: 0 pass, 1 fail, 2 usage or config error, 3 inconclusive.
Configs are JSON documents with sections chain, family, experiment, and
optional output; unknown keys are rejected by schema validation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import jsonschema

from . import mc, oracle
from .coefficients import (
    TruncationError,
    family as make_family,
    regvar_diagnostic,
    weight_profile,
)
from .innovations import chain_spec

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_INCONCLUSIVE = 3

_NUM = {"type": "number"}
_POS_INT = {"type": "integer", "minimum": 1}

CHAIN_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "properties": {"kind": {"const": "mh"}, "a": _NUM, "q": _NUM},
            "required": ["kind", "a", "q"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "gaussian"},
                "r": _NUM,
                "coeffs": {"type": "array", "items": _NUM, "minItems": 1},
            },
            "required": ["kind", "r", "coeffs"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "group"},
                "m": {"type": "integer", "minimum": 2},
                "step_pmf": {"type": "array", "items": _NUM, "minItems": 2},
                "fourier": {
                    "type": "array",
                    "items": {
                        "oneOf": [
                            _NUM,
                            {
                                "type": "array",
                                "items": _NUM,
                                "minItems": 2,
                                "maxItems": 2,
                            },
                        ]
                    },
                    "minItems": 2,
                },
            },
            "required": ["kind", "m", "step_pmf", "fourier"],
            "additionalProperties": False,
        },
    ]
}

FAMILY_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "properties": {"variant": {"const": "delta"}},
            "required": ["variant"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"variant": {"const": "frac_int"}, "d": _NUM},
            "required": ["variant", "d"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "variant": {"enum": ["power_law", "power_diff", "log_power"]},
                "alpha": _NUM,
            },
            "required": ["variant", "alpha"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "variant": {"const": "geometric"},
                "ratio": _NUM,
                "scale": _NUM,
            },
            "required": ["variant", "ratio"],
            "additionalProperties": False,
        },
    ]
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "chain": CHAIN_SCHEMA,
        "family": FAMILY_SCHEMA,
        "experiment": {
            "type": "object",
            "properties": {
                "mode": {"enum": list(mc.MODES)},
                "n": {"type": "integer", "minimum": 2},
                "replicates": {"type": "integer", "minimum": 2},
                "seed": {"type": "integer", "minimum": 0},
                "t_grid": {"type": "array", "items": _NUM, "minItems": 1},
                "eps": _NUM,
                "tolerances": {
                    "type": "object",
                    "additionalProperties": _NUM,
                },
                "window_cap": _POS_INT,
            },
            "required": ["mode", "n", "replicates", "seed"],
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {"dir": {"type": "string"}, "csv": {"type": "boolean"}},
            "additionalProperties": False,
        },
    },
    "required": ["chain", "family", "experiment"],
    "additionalProperties": False,
}


class CliError(Exception):
    """Usage or configuration problem; maps to exit code 2."""


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"config is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "(top level)"
        raise CliError(f"config schema error at {where}: {exc.message}") from exc
    return doc


def _parse_kv(text: str, what: str) -> dict:
    out = {}
    for item in text.split(","):
        if not item:
            continue
        key, sep, val = item.partition("=")
        if not sep:
            raise CliError(f"{what}: expected key=value, got {item!r}")
        out[key.strip()] = val.strip()
    return out


def parse_chain_arg(text: str):
    """Inline chain shorthand: mh:a=1,q=1 / gaussian:r=0.5,coeffs=0|1 /
    group:m=6,steps=1|5,fourier=1:0.5 (fourier mirror-filled conjugate)."""
    kind, _, rest = text.partition(":")
    kv = _parse_kv(rest, "--chain")
    try:
        if kind == "mh":
            return chain_spec("mh", a=float(kv.pop("a")), q=float(kv.pop("q")))
        if kind == "gaussian":
            coeffs = [float(v) for v in kv.pop("coeffs").split("|")]
            return chain_spec("gaussian", r=float(kv.pop("r")), coeffs=coeffs)
        if kind == "group":
            m = int(kv.pop("m"))
            steps = [int(v) for v in kv.pop("steps").split("|")]
            pmf = [0.0] * m
            for s in steps:
                pmf[s % m] += 1.0 / len(steps)
            fourier = [0j] * m
            for entry in kv.pop("fourier").split("|"):
                parts = entry.split(":")
                j = int(parts[0]) % m
                re = float(parts[1])
                im = float(parts[2]) if len(parts) > 2 else 0.0
                fourier[j] = complex(re, im)
                if (m - j) % m != j:
                    fourier[(m - j) % m] = complex(re, -im)
            return chain_spec("group", m=m, step_pmf=pmf, fourier=fourier)
    except (KeyError, ValueError) as exc:
        raise CliError(f"bad --chain argument {text!r}: {exc}") from exc
    raise CliError(f"unknown chain kind {kind!r} in --chain")


def parse_family_arg(text: str):
    """Inline family shorthand, e.g. frac_int:d=0.25 or delta."""
    variant, _, rest = text.partition(":")
    kv = _parse_kv(rest, "--family")
    try:
        return make_family(variant, **{k: float(v) for k, v in kv.items()})
    except (TypeError, ValueError) as exc:
        raise CliError(f"bad --family argument {text!r}: {exc}") from exc


def _chain_from_args(args):
    if args.chain:
        return parse_chain_arg(args.chain)
    if args.config:
        doc = load_config(args.config)
        return mc.ExperimentConfig.from_dict(doc).chain
    raise CliError("oracle needs --chain or --config")


def cmd_oracle(args) -> int:
    chain = _chain_from_args(args)
    fam = parse_family_arg(args.family) if args.family else None
    model = oracle.covariance_model(chain)
    group = chain if chain.kind == "group" else None
    cond = oracle.check_conditions(model, group)
    try:
        targets = oracle.limit_targets(chain, fam).to_dict()
    except oracle.ConditionError as exc:
        # conditions are still worth printing when targets do not exist
        targets = {"error": str(exc)}
    out = {
        "targets": targets,
        "conditions": cond.to_dict(),
        "notes": [],
    }
    if chain.kind == "mh":
        out["notes"].append(
            "sigma2 is the covariance-sum value; sigma2_alt is a competing "
            "closed form differing in one sign, kept so simulations "
            "adjudicate between them"
        )
    out["notes"].append(
        "two_pi_h0 (termwise moment sum) and blocked_sum (covariance sum "
        "of the blocked innovations) are both reported for the blocked "
        "process; they differ whenever spectral mass sits strictly "
        "inside (-1, 1)"
    )
    print(json.dumps(out, indent=2, sort_keys=True))
    if args.strict:
        failed = [
            name
            for name, e in cond.entries.items()
            if e.applicable and e.passed is False
        ]
        if failed:
            print(f"conditions failed: {', '.join(sorted(failed))}", file=sys.stderr)
            return EXIT_FAIL
    return EXIT_PASS


def cmd_run(args) -> int:
    if not args.config:
        raise CliError("run needs --config")
    doc = load_config(args.config)
    if args.seed is not None:
        doc["experiment"]["seed"] = args.seed
    threads = mc.set_threads(args.threads)
    cfg = mc.ExperimentConfig.from_dict(doc)
    outdir = Path(args.out or doc.get("output", {}).get("dir", "."))
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        report = mc.run_experiment(cfg)
    except mc.ExperimentError as exc:
        if exc.report is not None:
            exc.report.data["runtime"]["threads"] = threads
            path = outdir / "report.json"
            path.write_text(exc.report.to_json() + "\n", encoding="utf-8")
            print(f"report: {path}")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    report.data["runtime"]["threads"] = threads
    path = outdir / "report.json"
    path.write_text(report.to_json() + "\n", encoding="utf-8")
    if doc.get("output", {}).get("csv") and report.samples is not None:
        report.write_csv(outdir / "samples.csv")
    for name, verdict in sorted(report.data["verdicts"].items()):
        print(f"{cfg.mode}.{name}: {verdict}")
    print(f"report: {path}")
    overall = report.overall
    if overall == "pass":
        return EXIT_PASS
    if overall == "fail":
        return EXIT_FAIL
    return EXIT_INCONCLUSIVE


def cmd_coeffs(args) -> int:
    if args.config:
        doc = load_config(args.config)
        cfg = mc.ExperimentConfig.from_dict(doc)
        fam, n, eps = cfg.fam, cfg.n, cfg.eps
    elif args.family:
        fam = parse_family_arg(args.family)
        n, eps = args.n, args.eps
    else:
        raise CliError("coeffs needs --family or --config")
    profile = weight_profile(fam, n, eps)
    if len(profile.weights) > 2_000_000:
        raise CliError(
            f"window of {len(profile.weights)} rows is too large for a CSV "
            "dump; raise eps or lower n"
        )
    outdir = Path(args.out or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    cpath = outdir / "coeffs.csv"
    i0 = fam.i0
    coeffs = fam.coeff_block(i0, profile.j_max + n)
    with open(cpath, "w", encoding="utf-8") as fh:
        fh.write("i,a_i\n")
        for k, v in enumerate(coeffs):
            fh.write(f"{i0 + k},{float(v)!r}\n")
    wpath = outdir / "weights.csv"
    with open(wpath, "w", encoding="utf-8") as fh:
        fh.write("j,b_nj\n")
        for k, v in enumerate(profile.weights):
            fh.write(f"{profile.j_min + k},{float(v)!r}\n")
    diag = regvar_diagnostic(fam, n, eps=min(eps * 10, 0.5))
    print(
        json.dumps(
            {
                "variant": fam.variant,
                "n": n,
                "bn2": oracle.sig15(profile.bn2),
                "window": [profile.j_min, profile.j_max],
                "tail_fraction": oracle.sig15(profile.tail_fraction),
                "beta": oracle.sig15(diag.beta),
                "beta_hat": oracle.sig15(diag.beta_hat),
                "doubling_ratio": oracle.sig15(diag.doubling),
                "doubling_reference": oracle.sig15(2.0**diag.beta),
                "ratios": [
                    {
                        "t": oracle.sig15(t),
                        "ratio": oracle.sig15(ratio),
                        "reference": oracle.sig15(ref),
                    }
                    for t, ratio, ref in diag.ratios
                ],
                "files": [str(cpath), str(wpath)],
            },
            indent=2,
            sort_keys=True,
        )
    )
    return EXIT_PASS


def cmd_check(args) -> int:
    if not args.config:
        raise CliError("check needs --config")
    doc = load_config(args.config)
    cfg = mc.ExperimentConfig.from_dict(doc)  # constructor-level validation
    print(
        f"ok: {cfg.mode} run, chain={cfg.chain.kind}, "
        f"family={cfg.fam.variant}, n={cfg.n}, replicates={cfg.replicates}"
    )
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="revlin",
        description="Linear-process simulation laboratory with closed-form oracles",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, blurb in (
        ("oracle", cmd_oracle, "print limit targets and condition margins"),
        ("run", cmd_run, "run a Monte Carlo experiment from a config"),
        ("coeffs", cmd_coeffs, "dump coefficient and weight CSVs"),
        ("check", cmd_check, "validate a config file"),
    ):
        p = sub.add_parser(name, help=blurb)
        p.add_argument("--config", help="JSON config path")
        p.add_argument("--seed", type=lambda v: int(v, 0), default=None,
                       help="override the config seed (decimal or 0x hex)")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads (performance only; outputs identical)")
        p.add_argument("--strict", action="store_true",
                       help="nonzero exit when a condition fails (oracle)")
        p.add_argument("--out", help="output directory for reports and CSVs")
        p.add_argument("--chain", help="inline chain, e.g. mh:a=1,q=1")
        p.add_argument("--family", help="inline family, e.g. frac_int:d=0.25")
        p.add_argument("--n", type=int, default=64, help="window size for coeffs")
        p.add_argument("--eps", type=float, default=1e-3,
                       help="truncation tolerance for coeffs")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, KeyError, TypeError, TruncationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
