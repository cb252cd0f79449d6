"""Batch experiment runner.

Every command reads a JSON config (``--config``) whose keys may be
overridden by flags. Exit codes: 0 complete, 1 usage or config error,
2 invariant violation (a bug), 3 inconclusive Monte Carlo result.

Config layout::

    {
      "instance": {
        "property": {"catalog": "two_member_property", "params": {"n": 8}},
        "U": "11111111"
      },
      "tester": {"catalog": "uniform_sampler_tester", "params": {"q": 1}},
      "l": 1,
      "mode": "exact"
    }

``property`` may also be ``{"file": "members.txt"}`` or an inline
``{"alphabet": "01", "n": 8, "members": [...]}``; ``tester`` may be
``{"tree_file": "tree.json"}``. Relative paths resolve against the
config file's directory.
"""
from __future__ import annotations

import argparse
import csv
import inspect
import io
import json
import os
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

from . import catalog
from .adversary import (
    Mode,
    Outcome,
    Thresholds,
    Verdict,
    attack,
    verify_distinguisher,
    verify_epsilon_test,
)
from .errors import InvariantViolation, QueryBoundError
from .machines import DEFAULT_DELTA, DEFAULT_HALF_WIDTH, Estimate, loads_tree, rational_to_json
from .words import (
    DEFAULT_ENUMERATION_BOUND,
    Word,
    build_attack_instance,
    load_property,
    property_from_document,
    verify_graded_distances,
)

EXIT_OK, EXIT_USAGE, EXIT_INVARIANT, EXIT_INCONCLUSIVE = 0, 1, 2, 3


class ConfigError(Exception):
    pass


def _enc(x):
    if isinstance(x, Estimate):
        return {"estimate": x.estimate, "halfWidth": x.half_width, "confidence": x.confidence}
    if isinstance(x, Fraction):
        return rational_to_json(x)
    return x


def _cell(x) -> str:
    if isinstance(x, Estimate):
        return repr(x.estimate)
    return str(x)


# ---- config resolution -----------------------------------------------------

def _resolve(base: Path, path) -> Path:
    path = Path(path)
    return path if path.is_absolute() else base / path


def _load_property(cfg, base: Path):
    if not isinstance(cfg, dict):
        raise ConfigError("'property' must be an object")
    if "catalog" in cfg:
        P = catalog.build(cfg["catalog"], **cfg.get("params", {}))
        if not hasattr(P, "members"):
            raise ConfigError(f"catalog entry {cfg['catalog']!r} is not a property")
        return P
    if "file" in cfg:
        try:
            return load_property(_resolve(base, cfg["file"]))
        except OSError as exc:
            raise ConfigError(f"cannot read property file: {exc}") from None
    return property_from_document(cfg)


def _load_instance(config: dict, base: Path):
    cfg = config.get("instance")
    if not isinstance(cfg, dict):
        raise ConfigError("config needs an 'instance' object")
    if "catalog" in cfg:
        return catalog.build(cfg["catalog"], **cfg.get("params", {}))
    if "property" not in cfg or "U" not in cfg:
        raise ConfigError("instance needs 'property' and 'U'")
    P = _load_property(cfg["property"], base)
    return build_attack_instance(Word.parse(cfg["U"], P.alphabet), P)


def _load_tester(config: dict, base: Path, inst, q_override=None):
    cfg = config.get("tester")
    if not isinstance(cfg, dict):
        raise ConfigError("config needs a 'tester' object")
    if "tree_file" in cfg:
        if q_override is not None:
            raise ConfigError("a tree file has a fixed budget; sweeps need a catalog tester")
        try:
            return loads_tree(_resolve(base, cfg["tree_file"]).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read tree file: {exc}") from None
    name = cfg.get("catalog")
    entry = catalog.CATALOG.get(name)
    if entry is None or entry.kind != "tester":
        raise ConfigError(f"unknown catalog tester {name!r}")
    params = dict(cfg.get("params", {}))
    accepted = inspect.signature(entry.constructor).parameters
    if "inst" in accepted:
        params.setdefault("inst", inst)
    if "n" in accepted:
        params.setdefault("n", inst.n)
    if q_override is not None:
        if "q" not in accepted:
            raise ConfigError(f"{name} has no query parameter to sweep")
        params["q"] = q_override
    return entry.build(**params)


def _thresholds(value) -> Thresholds:
    if value is None:
        return Thresholds()
    if isinstance(value, str):
        return Thresholds.parse(value)
    return Thresholds(Fraction(value[0]), Fraction(value[1]))


def _positive_int(value, name):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    return value


def _mc_kwargs(config):
    return {
        "seed": _positive_int(config.get("seed", 0), "seed"),
        "trials": config.get("trials"),
        "half_width": float(config.get("half_width", DEFAULT_HALF_WIDTH)),
        "delta": float(config.get("delta", DEFAULT_DELTA)),
    }


# ---- commands --------------------------------------------------------------

def cmd_lemma1(config, base):
    inst = _load_instance(config, base)
    report = verify_graded_distances(inst, int(config.get("max_exhaustive", 2 ** 16)),
                                     seed=config.get("seed", 0))
    doc = {
        "command": "lemma1",
        "passed": report.passed,
        "exhaustive": report.exhaustive,
        "checked": report.checked,
        "totalSubsets": report.total_subsets,
        "n": inst.n,
        "V": str(inst.V),
        "D": list(inst.D),
    }
    if report.counterexample:
        A, observed, expected = report.counterexample
        doc["counterexample"] = {"A": list(A), "observed": _enc(observed),
                                 "expected": _enc(expected)}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n", EXIT_OK if report.passed else EXIT_INVARIANT


def cmd_attack(config, base):
    inst = _load_instance(config, base)
    tester = _load_tester(config, base, inst)
    l = _positive_int(config.get("l", 1), "l")
    if l > len(inst.D):
        doc = {"command": "attack", "verdict": Verdict.NOT_APPLICABLE.value,
               "reason": f"l={l} exceeds |D|={len(inst.D)}"}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n", EXIT_OK
    cert = attack(tester, inst, l, config.get("mode", "exact"), k=config.get("k"),
                  thresholds=_thresholds(config.get("thresholds")), **_mc_kwargs(config))
    code = EXIT_INCONCLUSIVE if cert.verdict is Verdict.INCONCLUSIVE else EXIT_OK
    return cert.to_json() + "\n", code


def cmd_verify(config, base):
    thresholds = _thresholds(config.get("thresholds"))
    mode = config.get("mode", "exact")
    kind = config.get("verify", "distinguisher")
    inst = _load_instance(config, base)
    tester = _load_tester(config, base, inst)
    if kind == "distinguisher":
        l = _positive_int(config.get("l", 1), "l")
        r = verify_distinguisher(tester, inst, l, thresholds, mode,
                                 int(config.get("coverage", 10_000)), **_mc_kwargs(config))
        doc = {"command": "verify", "verify": kind, "outcome": r.outcome.value,
               "acceptOnV": _enc(r.accept_on_v),
               "worstSet": None if r.worst_set is None else list(r.worst_set),
               "worstRejection": _enc(r.worst_rejection), "checked": r.checked,
               "failures": r.failures, "exhaustive": r.exhaustive}
    elif kind == "epsilon":
        if "epsilon" not in config:
            raise ConfigError("epsilon verification needs 'epsilon'")
        r = verify_epsilon_test(tester, inst.property, Fraction(str(config["epsilon"])),
                                thresholds, mode,
                                int(config.get("enumeration_bound", DEFAULT_ENUMERATION_BOUND)),
                                **_mc_kwargs(config))

        def worst(pair):
            return None if pair is None else {"word": str(pair[0]), "probability": _enc(pair[1])}

        doc = {"command": "verify", "verify": kind, "outcome": r.outcome.value,
               "membersChecked": r.members_checked, "farChecked": r.far_checked,
               "worstMember": worst(r.worst_member), "worstFar": worst(r.worst_far),
               "failures": r.failures}
    else:
        raise ConfigError(f"'verify' must be 'distinguisher' or 'epsilon', got {kind!r}")
    code = EXIT_INCONCLUSIVE if r.outcome is Outcome.INCONCLUSIVE else EXIT_OK
    return json.dumps(doc, indent=2, sort_keys=True) + "\n", code


SWEEP_HEADER = ["q", "gap", "unionBound", "floorSatisfied", "verdict"]


def cmd_sweep(config, base):
    inst = _load_instance(config, base)
    l = _positive_int(config.get("l", 1), "l")
    q_range = config.get("q_range", [1, 8])
    if not isinstance(q_range, list) or len(q_range) != 2:
        raise ConfigError("'q_range' must be [first, last]")
    lo, hi = (_positive_int(x, "q") for x in q_range)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    code = EXIT_OK
    for q in range(lo, hi + 1):
        tester = _load_tester(config, base, inst, q_override=q)
        cert = attack(tester, inst, l, config.get("mode", "exact"),
                      thresholds=_thresholds(config.get("thresholds")), **_mc_kwargs(config))
        if cert.verdict is Verdict.INCONCLUSIVE:
            code = EXIT_INCONCLUSIVE
        writer.writerow([q, _cell(cert.gap), _cell(cert.union_bound),
                         str(not cert.below_floor).lower(), cert.verdict.value])
    return out.getvalue(), code


COMMANDS = {"lemma1": cmd_lemma1, "attack": cmd_attack, "verify": cmd_verify, "sweep": cmd_sweep}


def _write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="querybound", description=__doc__.split("\n\n")[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", type=Path, help="JSON experiment config")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--mode", choices=[m.value for m in Mode])
    parser.add_argument("--out", type=Path, help="output file (default: stdout)")
    parser.add_argument("--l", type=int, dest="l")
    sampling = parser.add_mutually_exclusive_group()
    sampling.add_argument("--trials", type=int)
    sampling.add_argument("--half-width", type=float, dest="half_width")
    parser.add_argument("--thresholds", help="completeness,soundness e.g. 2/3,2/3")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config, base = {}, Path.cwd()
    try:
        if args.config is not None:
            base = args.config.resolve().parent
            config = json.loads(args.config.read_text())
            if not isinstance(config, dict):
                raise ConfigError("config must be a JSON object")
        for key in ("seed", "mode", "l", "trials", "half_width", "thresholds"):
            value = getattr(args, key)
            if value is not None:
                config[key] = value
        if config.get("seed", 0) < 0:
            raise ConfigError("--seed must be non-negative")
        text, code = COMMANDS[args.command](config, base)
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ConfigError, QueryBoundError, OSError, json.JSONDecodeError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.out is not None:
        _write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
