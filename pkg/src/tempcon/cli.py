"""Command-line entry point: mine, detect, eval-recall, rerank, eval-rank, gen-synth."""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import fields
from pathlib import Path
from typing import Optional, Sequence

from .detector import Conflict, DetectReport, detect_parallel, load_annotations, recall
from .kg import DEFAULT_TYPE_PROPERTY, load_graph
from .metrics import LEVELS
from .miner import MiningConfig, mine_full, read_constraints, write_constraints
from .reranker import PredictionCase, conflicting_candidates, load_predictions, rank_metrics
from .synth import KINDS, Planted, SynthSpec, generate_synthetic

log = logging.getLogger("tempcon")

# option name -> (type, MiningConfig field)
TUNABLES = {
    "freq": (int, "freq"),
    "accept": (float, "accept"),
    "refine": (float, "refine"),
    "alpha": (float, "alpha"),
    "beta": (float, "beta"),
    "gamma": (float, "gamma"),
    "confidence": (str, "level"),
    "threads": (int, "workers"),
    "shapes": (str, "shapes"),
    "max_refine_vars": (int, "max_refine_vars"),
    "max_refinements": (int, "max_refinements"),
}
_BOOLS = {"no_prune", "deterministic"}


class CliError(Exception):
    pass


def read_config(path) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment. Dashes in keys are accepted."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise CliError(f"cannot read config {path}: {e}") from None
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{n}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        k = k.replace("-", "_")
        if k not in TUNABLES and k not in _BOOLS and k != "type_property":
            raise CliError(f"{path}:{n}: unknown key {k!r}")
        out[k] = v
    return out


def _truthy(v: str) -> bool:
    if v.lower() in ("1", "true", "yes", "on"):
        return True
    if v.lower() in ("0", "false", "no", "off"):
        return False
    raise CliError(f"not a boolean: {v!r}")


def build_config(args) -> MiningConfig:
    """Defaults, overridden by --config, overridden by explicit flags."""
    cfg = MiningConfig()
    file_vals = read_config(args.config) if getattr(args, "config", None) else {}
    for key, (typ, attr) in TUNABLES.items():
        raw = getattr(args, key, None)
        if raw is None and key in file_vals:
            try:
                raw = typ(file_vals[key])
            except ValueError:
                raise CliError(f"config: bad value for {key}: {file_vals[key]!r}") from None
        if raw is not None:
            setattr(cfg, attr, raw)
    no_prune = args.no_prune or _truthy(file_vals.get("no_prune", "false"))
    cfg.pruning = not no_prune
    cfg.deterministic = args.deterministic or _truthy(file_vals.get("deterministic", "false")) or cfg.workers == 1
    if args.type_property is None and "type_property" in file_vals:
        args.type_property = file_vals["type_property"]
    try:
        return cfg.validate()
    except ValueError as e:
        raise CliError(str(e)) from None


def _type_property(args) -> str:
    return args.type_property or DEFAULT_TYPE_PROPERTY


def _load(args):
    g = load_graph(args.kg, _type_property(args))
    if g.report.skipped:
        log.warning("%s: %d malformed lines skipped", args.kg, len(g.report.skipped))
    log.info("%s: %s", args.kg, g.report.summary())
    return g


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- subcommands ------------------------------------------------------------


def cmd_mine(args) -> int:
    cfg = build_config(args)
    t0 = time.perf_counter()
    g = _load(args)
    t1 = time.perf_counter()
    res = mine_full(g, cfg)
    t2 = time.perf_counter()
    write_constraints(res.constraints, args.out)
    log.info("%d constraints written to %s", len(res.constraints), args.out)
    if args.stats:
        stats = res.summary()
        stats["config"] = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
        stats["graph"] = {
            "facts": len(g),
            "lines": g.report.lines,
            "duplicates": g.report.duplicates,
            "malformed": len(g.report.skipped),
        }
        timings = {"load_s": round(t1 - t0, 3), "mine_s": round(t2 - t1, 3)}
        if cfg.deterministic:
            # wall-clock numbers would break byte-identical reruns; log them instead
            log.info("timings: %s", timings)
        else:
            stats["timings"] = timings
        _write_json(args.stats, stats)
    return 0


def cmd_detect(args) -> int:
    g = _load(args)
    try:
        constraints = read_constraints(args.constraints)
    except OSError as e:
        raise CliError(str(e)) from None
    report = DetectReport()
    workers = 1 if args.deterministic else args.threads
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        for c in detect_parallel(g, constraints, workers, report):
            fh.write(c.to_json() + "\n")
    footer = report.footer()
    footer["skipped"] = [{"constraint_id": cid, "reason": why} for cid, why in report.skipped]
    if args.stats:
        _write_json(args.stats, footer)
    print(f"{report.conflicts} conflicts from {len(constraints) - len(report.skipped)} constraints "
          f"({len(report.skipped)} skipped)")
    return 0


def _read_conflicts(path) -> list[Conflict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if line.strip():
                try:
                    out.append(Conflict.from_json(line))
                except (ValueError, KeyError, TypeError) as e:
                    raise CliError(f"{path}:{n}: bad conflict line: {e}") from None
    return out


def cmd_eval_recall(args) -> int:
    g = _load(args) if args.kg else None
    try:
        ann = load_annotations(args.annotations, g)
    except ValueError as e:
        raise CliError(str(e)) from None
    res = recall(_read_conflicts(args.conflicts), ann)
    print(res.text())
    if args.out:
        _write_json(args.out, res.to_dict())
    return 0


def cmd_rerank(args) -> int:
    g = _load(args)
    constraints = read_constraints(args.constraints)
    cases, bad = load_predictions(args.predictions)
    if bad:
        print(f"{len(bad)} malformed prediction lines skipped", file=sys.stderr)
    moved = 0
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        for case in cases:
            demoted = conflicting_candidates(g, constraints, case)
            if not demoted:
                fh.write(case.raw + "\n")
                continue
            moved += 1
            keep = [p for p in case.candidates if p not in demoted]
            fh.write(case.to_json(keep + demoted, demoted) + "\n")
    print(f"{moved} of {len(cases)} cases reordered")
    return 1 if bad and args.strict else 0


def cmd_eval_rank(args) -> int:
    cases, bad = load_predictions(args.predictions) if args.strict else _lenient_predictions(args.predictions)
    m = rank_metrics((c.candidates, c.gold) for c in cases)
    m.rejected += len(bad)
    print(m.table())
    if args.out:
        _write_json(args.out, m.to_dict())
    return 0


def _lenient_predictions(path):
    """Like load_predictions, but keeps cases whose gold is missing so that
    rank_metrics can count them as rejected."""
    cases, bad = [], []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                cases.append(PredictionCase.from_json(line))
            except (ValueError, KeyError, TypeError) as e:
                bad.append((n, str(e)))
    if bad:
        print(f"{len(bad)} malformed prediction lines skipped", file=sys.stderr)
    return cases, bad


def _planted(text: str) -> Planted:
    kind, _, rest = text.partition(":")
    if kind not in KINDS or not rest:
        raise argparse.ArgumentTypeError(f"expected KIND:PROP[,PROP] with KIND in {KINDS}, got {text!r}")
    try:
        return Planted(kind, tuple(rest.split(",")))
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def cmd_gen_synth(args) -> int:
    planted = args.planted or [Planted("disjoint", ("member_of",))]
    for p in planted:
        p.coverage = args.coverage
    spec = SynthSpec(
        entities=args.entities,
        planted=planted,
        noise=args.noise,
        seed=args.seed,
        noise_properties=args.noise_properties,
        noise_facts=args.noise_facts,
        absent_rate=args.absent_rate,
        type_property=_type_property(args),
    )
    try:
        sg = generate_synthetic(spec)
    except ValueError as e:
        raise CliError(str(e)) from None
    sg.write(args.out)
    if args.annotations:
        sg.write_annotations(args.annotations, args.correct_ratio, args.seed)
    print(f"{len(sg.lines)} lines, {len(sg.wrong_lines)} planted wrong facts -> {args.out}")
    return 0


# -- parser -----------------------------------------------------------------


def _common(p: argparse.ArgumentParser, kg_required: bool = True) -> None:
    p.add_argument("--kg", required=kg_required, help="quad TSV: subject, property, object, start, end")
    p.add_argument("--type-property", default=None, help=f"class membership property (default {DEFAULT_TYPE_PROPERTY})")
    p.add_argument("--deterministic", action="store_true", help="single worker, reproducible output")
    p.add_argument("--threads", type=int, default=None, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tempcon", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mine", help="mine temporal constraints")
    _common(p)
    p.add_argument("--out", required=True, help="constraints JSONL")
    p.add_argument("--stats", help="run summary JSON")
    p.add_argument("--config", help="key=value file; explicit flags win")
    p.add_argument("--confidence", choices=LEVELS, default=None)
    p.add_argument("--freq", type=int, default=None)
    p.add_argument("--accept", type=float, default=None)
    p.add_argument("--refine", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--shapes", default=None, help="A, B or AB")
    p.add_argument("--max-refine-vars", type=int, default=None)
    p.add_argument("--max-refinements", type=int, default=None)
    p.add_argument("--no-prune", action="store_true")
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("detect", help="list conflicting facts")
    _common(p)
    p.add_argument("--constraints", required=True)
    p.add_argument("--out", required=True, help="conflicts JSONL")
    p.add_argument("--stats", help="summary footer with per-constraint counts")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval-recall", help="recall of wrong facts")
    p.add_argument("--conflicts", required=True)
    p.add_argument("--annotations", required=True, help="fact_id<TAB>correct|wrong")
    p.add_argument("--kg", help="reject annotation ids not in this graph")
    p.add_argument("--type-property", default=None)
    p.add_argument("--out", help="per-fact JSON report")
    p.set_defaults(func=cmd_eval_recall)

    p = sub.add_parser("rerank", help="demote conflicting predicted properties")
    _common(p)
    p.add_argument("--constraints", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--strict", action="store_true", help="exit 1 if any prediction line is malformed")
    p.set_defaults(func=cmd_rerank)

    p = sub.add_parser("eval-rank", help="MRR and Hits@k of a predictions file")
    p.add_argument("--predictions", required=True)
    p.add_argument("--out", help="metrics JSON")
    p.add_argument("--strict", action="store_true", help="treat missing gold as malformed")
    p.set_defaults(func=cmd_eval_rank)

    p = sub.add_parser("gen-synth", help="write a synthetic graph with planted regularities")
    p.add_argument("--out", required=True)
    p.add_argument("--annotations", help="also write an annotation TSV")
    p.add_argument("--correct-ratio", type=float, default=1.0)
    p.add_argument("--entities", type=int, default=500)
    p.add_argument("--planted", type=_planted, action="append", help="KIND:PROP[,PROP], repeatable")
    p.add_argument("--coverage", type=float, default=1.0)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--noise-properties", type=int, default=0)
    p.add_argument("--noise-facts", type=float, default=0.0)
    p.add_argument("--absent-rate", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--type-property", default=None)
    p.set_defaults(func=cmd_gen_synth)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    if getattr(args, "threads", None) is not None and args.threads < 1:
        parser.error("--threads must be >= 1")
    if hasattr(args, "threads") and args.func is not cmd_mine and args.threads is None:
        args.threads = 1
    try:
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
