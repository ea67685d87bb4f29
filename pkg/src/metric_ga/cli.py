"""Command-line entry point: rerank, optimize, mine, report, rerun.

Inputs are JSONL case files (see :mod:`metric_ga.cases`). Every command
emits its results plus a run manifest capturing the resolved configuration;
``rerun`` replays a manifest. Exit codes: 0 success, 2 usage, 3 data,
4 scorer transport.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from datetime import datetime, timezone
from typing import Callable, Sequence

from . import __version__
from .adversarial import Margins, mine
from .cases import CaseParseError, SentenceCase, read_cases
from .eval_report import corpus_report, paired_bootstrap, ratio_table, rerank
from .fitness import (FitnessComponent, evaluate, external_component,
                      native_component, spec_for_case)
from .ga_engine import GAConfig, derive_case_seed, run
from .metrics import length_normalized_logprob
from .mutation_sources import (TokenPool, load_lexicon, load_wordlist,
                               pool_from_init, pool_from_lexicon, union)
from .scorer_bridge import (ScorerEndpoint, ScorerProtocolError,
                            ScorerTransportError)
from .textcore import tokenize

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_SCORER = 4

NATIVE_NAMES = ("bleu", "chrf")
MUTATION_SOURCES = ("init", "lexicon", "dict", "wordlist")


class UsageError(Exception):
    """Flag combinations argparse cannot express; maps to exit code 2."""


# ---------------------------------------------------------------------------
# Flag parsing helpers

def _parse_scorer(value: str) -> tuple[str, ScorerEndpoint]:
    """Parse --scorer NAME=KIND:ADDRESS into a named endpoint."""
    name, sep, rest = value.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError(
            f"expected NAME=KIND:ADDRESS, got {value!r}")
    kind, sep, address = rest.partition(":")
    if not sep and kind != "mock":
        raise argparse.ArgumentTypeError(
            f"expected NAME=KIND:ADDRESS, got {value!r}")
    if kind == "http" and address.startswith("//"):
        address = "http:" + address
    try:
        if kind == "mock":
            endpoint = ScorerEndpoint(kind="mock", mock_spec=address)
        else:
            endpoint = ScorerEndpoint(kind=kind, address=address)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return name, endpoint


def _resolve_component(name: str, scorers: dict[str, ScorerEndpoint],
                       reference_free: set[str]) -> FitnessComponent:
    if name in NATIVE_NAMES:
        return native_component(name)
    if name in scorers:
        needs_ref = False if name in reference_free else None
        return external_component(scorers[name], name=name, needs_reference=needs_ref)
    raise UsageError(f"unknown metric {name!r}: expected bleu, chrf, or a --scorer name")


def _resolve_components(names: Sequence[str], args) -> list[FitnessComponent]:
    scorers = dict(args.scorer or [])
    reference_free = set(args.reference_free or [])
    return [_resolve_component(n, scorers, reference_free) for n in names]


def _build_pool(sources: Sequence[str], case: SentenceCase,
                wordlist_pool: TokenPool | None, lexicon_entries) -> TokenPool:
    pools = []
    for source in dict.fromkeys(sources):
        if source == "init":
            pools.append(pool_from_init([tokenize(h.text) for h in case.hyps]))
        elif source in ("lexicon", "dict"):
            pools.append(pool_from_lexicon(tokenize(case.src), lexicon_entries))
        elif source == "wordlist":
            pools.append(wordlist_pool)
        else:
            raise UsageError(f"unknown mutation source {source!r}")
    return union(pools)


def _ga_config(args) -> GAConfig:
    config = GAConfig(population_size=args.pop, generations=args.gens,
                      crossover_rate=args.crossover_rate,
                      length_factor=args.length_factor,
                      tournament_size=args.tournament_size, seed=args.seed)
    config.validate()
    return config


def _load_mutation_inputs(args):
    sources = list(args.mutation or ["init"])
    wordlist_pool = None
    lexicon_entries = []
    if "wordlist" in sources:
        if not args.wordlist:
            raise UsageError("--mutation wordlist requires --wordlist PATH")
        wordlist_pool = load_wordlist(args.wordlist)
    if "lexicon" in sources or "dict" in sources:
        if not args.lexicon:
            raise UsageError("--mutation lexicon requires --lexicon PATH")
        lexicon_entries = load_lexicon(args.lexicon)
    return sources, wordlist_pool, lexicon_entries


def _map_cases(cases: Sequence[SentenceCase], worker: Callable, jobs: int) -> list:
    """Apply ``worker`` per case; output order equals input order."""
    if jobs <= 1:
        return [worker(case) for case in cases]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, cases))


# ---------------------------------------------------------------------------
# Output + manifest

def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".metric-ga-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


def _write_output(output: str | None, lines: Sequence[str], manifest: dict) -> None:
    payload = "".join(line + "\n" for line in lines)
    manifest_line = json.dumps(manifest, ensure_ascii=False)
    if output in (None, "-"):
        sys.stdout.write(payload)
        print(manifest_line, file=sys.stderr)
    else:
        _atomic_write(output, payload)
        _atomic_write(output + ".manifest.json", manifest_line + "\n")


def _manifest(command: str, argv: Sequence[str], started: str, config: dict) -> dict:
    return {
        "tool": {"name": "metric-ga", "version": __version__},
        "command": command,
        "argv": list(argv),
        "config": config,
        "started_utc": started,
        "finished_utc": _utcnow(),
    }


def _json_line(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False)


# ---------------------------------------------------------------------------
# Commands

def cmd_rerank(args, argv) -> int:
    started = _utcnow()
    cases = read_cases(args.input)
    component = None
    if args.mode != "logprob":
        if not args.metric:
            raise UsageError(f"--mode {args.mode} requires --metric")
        component = _resolve_components([args.metric], args)[0]

    lines = []
    chosen_texts = []
    for case in cases:
        idx = rerank(case, args.mode, component)
        text = case.hyps[idx].text
        chosen_texts.append(text)
        if args.mode == "logprob":
            scores = {"logprob_norm": length_normalized_logprob(case.hyps[idx])}
        else:
            spec = spec_for_case([component], args.mode, case)
            scores = {component.name: evaluate(spec, case.src, text).total}
        lines.append(_json_line({"id": case.id, "chosen_index": idx,
                                 "text": text, "scores": scores}))

    report_names = [m for m in (args.report_metric or ["bleu", "chrf"]) if m != "none"]
    if report_names:
        comps = _resolve_components(report_names, args)
        lines.append(_json_line({"corpus": corpus_report(cases, chosen_texts, comps)}))

    config = {"mode": args.mode, "metric": args.metric,
              "report_metrics": report_names, "input": os.path.abspath(args.input)}
    _write_output(args.output, lines, _manifest("rerank", argv, started, config))
    return EXIT_OK


def cmd_optimize(args, argv) -> int:
    started = _utcnow()
    cases = read_cases(args.input)
    components = _resolve_components(args.fitness, args)
    base_config = _ga_config(args)
    sources, wordlist_pool, lexicon_entries = _load_mutation_inputs(args)

    def optimize_case(case: SentenceCase) -> dict:
        spec = spec_for_case(components, args.mode, case)
        pool = _build_pool(sources, case, wordlist_pool, lexicon_entries)
        config = replace(base_config, seed=derive_case_seed(args.seed, case.id))
        result = run(case, spec, pool.tokens, config)
        return {
            "id": case.id,
            "best_text": result.best_text,
            "best_fitness": result.best_fitness.total,
            "per_component": list(result.best_fitness.per_component),
            "is_novel": result.is_novel,
            "trace": [[best, mean] for best, mean in result.trace],
        }

    results = _map_cases(cases, optimize_case, args.jobs)
    lines = [_json_line(r) for r in results]
    new_ratio = sum(1 for r in results if r["is_novel"]) / len(results) if results else 0.0
    lines.append(_json_line({"summary": {"cases": len(results), "new_ratio": new_ratio}}))

    config = {"fitness": list(args.fitness), "mode": args.mode,
              "mutation": sources, "population_size": args.pop,
              "generations": args.gens, "crossover_rate": args.crossover_rate,
              "length_factor": args.length_factor,
              "tournament_size": args.tournament_size, "seed": args.seed,
              "jobs": args.jobs, "input": os.path.abspath(args.input),
              "wordlist": args.wordlist and os.path.abspath(args.wordlist),
              "lexicon": args.lexicon and os.path.abspath(args.lexicon)}
    _write_output(args.output, lines, _manifest("optimize", argv, started, config))
    return EXIT_OK


def cmd_mine(args, argv) -> int:
    started = _utcnow()
    cases = read_cases(args.input)
    objective = _resolve_components(args.objective, args)
    held_out = _resolve_components([args.held_out], args)[0]
    base_config = _ga_config(args)
    sources, wordlist_pool, lexicon_entries = _load_mutation_inputs(args)
    margins = Margins(objective=args.margins[0], held_out=args.margins[1])

    def mine_case(case: SentenceCase):
        pool = _build_pool(sources, case, wordlist_pool, lexicon_entries)
        return mine([case], objective, held_out, pool.tokens, base_config, margins)[0]

    records = _map_cases(cases, mine_case, args.jobs)
    improved = sum(1 for r in records if r.o_init + margins.objective < r.o_ga)
    adversarial = sum(1 for r in records if r.is_adversarial)
    emitted = [r for r in records if r.is_adversarial] if args.only_adversarial else records
    lines = [r.to_json() for r in emitted]
    lines.append(_json_line({"summary": {"cases": len(records), "improved": improved,
                                         "adversarial": adversarial}}))

    config = {"objective": list(args.objective), "held_out": args.held_out,
              "margins": list(args.margins), "mutation": sources,
              "population_size": args.pop, "generations": args.gens,
              "crossover_rate": args.crossover_rate,
              "length_factor": args.length_factor,
              "tournament_size": args.tournament_size, "seed": args.seed,
              "jobs": args.jobs, "only_adversarial": bool(args.only_adversarial),
              "input": os.path.abspath(args.input),
              "wordlist": args.wordlist and os.path.abspath(args.wordlist),
              "lexicon": args.lexicon and os.path.abspath(args.lexicon)}
    _write_output(args.output, lines, _manifest("mine", argv, started, config))
    return EXIT_OK


def _read_scores(path: str) -> tuple[list[str], list[list[float]]]:
    """Read a TSV score file: header of metric names, one float row per segment."""
    with open(path, encoding="utf-8") as fh:
        rows = [line.rstrip("\n").split("\t") for line in fh if line.strip()]
    if not rows:
        raise ValueError(f"{path}: empty score file")
    header = rows[0]
    columns: list[list[float]] = [[] for _ in header]
    for n, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ValueError(f"{path}: line {n} has {len(row)} fields, expected {len(header)}")
        for i, field in enumerate(row):
            try:
                columns[i].append(float(field))
            except ValueError:
                raise ValueError(f"{path}: line {n}: non-numeric score {field!r}") from None
    return header, columns


def cmd_report(args, argv) -> int:
    started = _utcnow()
    header_a, cols_a = _read_scores(args.system_a)
    header_b, cols_b = _read_scores(args.system_b)
    if header_a != header_b:
        raise ValueError(f"metric columns differ: {header_a} vs {header_b}")
    if any(len(a) != len(b) for a, b in zip(cols_a, cols_b)):
        raise ValueError("score files are not aligned (different segment counts)")

    metrics = {}
    for name, a, b in zip(header_a, cols_a, cols_b):
        report = paired_bootstrap(a, b, resamples=args.bootstrap_n, seed=args.seed)
        improved, degraded, unchanged = ratio_table(a, b)
        metrics[name] = {
            "system_a_mean": sum(a) / len(a),
            "system_b_mean": sum(b) / len(b),
            "bootstrap": {"mean": report.mean, "ci_low": report.ci_low,
                          "ci_high": report.ci_high, "resamples": report.resamples,
                          "p_better": report.p_better},
            "ratio": {"improved_pct": improved, "degraded_pct": degraded,
                      "unchanged_pct": unchanged},
        }
    result = {"segments": len(cols_a[0]), "metrics": metrics}

    tsv_rows = [["system"] + header_a,
                ["a"] + [repr(m["system_a_mean"]) for m in metrics.values()],
                ["b"] + [repr(m["system_b_mean"]) for m in metrics.values()],
                ["ci_low_a"] + [repr(m["bootstrap"]["ci_low"]) for m in metrics.values()],
                ["ci_high_a"] + [repr(m["bootstrap"]["ci_high"]) for m in metrics.values()],
                ["p_better"] + [repr(m["bootstrap"]["p_better"]) for m in metrics.values()],
                ["improved_pct"] + [repr(m["ratio"]["improved_pct"]) for m in metrics.values()],
                ["degraded_pct"] + [repr(m["ratio"]["degraded_pct"]) for m in metrics.values()],
                ["unchanged_pct"] + [repr(m["ratio"]["unchanged_pct"]) for m in metrics.values()]]
    tsv_text = "".join("\t".join(row) + "\n" for row in tsv_rows)
    tsv_path = args.tsv
    if tsv_path is None and args.output not in (None, "-"):
        tsv_path = args.output + ".tsv"
    if tsv_path:
        _atomic_write(tsv_path, tsv_text)

    config = {"system_a": os.path.abspath(args.system_a),
              "system_b": os.path.abspath(args.system_b),
              "bootstrap_n": args.bootstrap_n, "seed": args.seed}
    _write_output(args.output, [_json_line(result)],
                  _manifest("report", argv, started, config))
    return EXIT_OK


def _strip_output_flags(argv: list[str]) -> list[str]:
    out = []
    skip = False
    for token in argv:
        if skip:
            skip = False
            continue
        if token in ("-o", "--output", "--tsv"):
            skip = True
            continue
        if token.startswith("--output=") or token.startswith("--tsv="):
            continue
        out.append(token)
    return out


def cmd_rerun(args, argv) -> int:
    with open(args.manifest, encoding="utf-8") as fh:
        manifest = json.load(fh)
    stored = manifest.get("argv")
    if not isinstance(stored, list) or not stored:
        raise ValueError(f"{args.manifest}: manifest has no usable argv")
    new_argv = _strip_output_flags([str(t) for t in stored])
    if args.output:
        new_argv += ["-o", args.output]
    return main(new_argv)


# ---------------------------------------------------------------------------
# Parser

def _add_scorer_flags(sub):
    sub.add_argument("--scorer", action="append", type=_parse_scorer, metavar="NAME=KIND:ADDR",
                     help="register an external scorer (kind: mock, subprocess, http)")
    sub.add_argument("--reference-free", action="append", metavar="NAME",
                     help="treat this scorer as reference-free (QE-style)")


def _add_ga_flags(sub):
    sub.add_argument("--pop", type=int, default=2000, help="population size (default 2000)")
    sub.add_argument("--gens", type=int, default=300, help="generations (default 300)")
    sub.add_argument("--crossover-rate", type=float, default=0.1)
    sub.add_argument("--length-factor", type=float, default=1.1)
    sub.add_argument("--tournament-size", type=int, default=3)
    sub.add_argument("--seed", type=int, default=42)
    sub.add_argument("--jobs", type=int, default=1, help="cases processed in parallel")
    sub.add_argument("--mutation", action="append", choices=MUTATION_SOURCES,
                     help="mutation token source, repeatable (default: init)")
    sub.add_argument("--wordlist", help="wordlist file for --mutation wordlist")
    sub.add_argument("--lexicon", help="TSV lexicon file for --mutation lexicon")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metric-ga",
        description="Optimize MT n-best lists with a metric-driven genetic algorithm.")
    parser.add_argument("--version", action="version", version=f"metric-ga {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("rerank", help="pick one hypothesis per case")
    p.add_argument("input", help="JSONL case file")
    p.add_argument("--mode", choices=("logprob", "oracle", "mbr"), default="logprob")
    p.add_argument("--metric", help="bleu, chrf, or a --scorer name")
    p.add_argument("--report-metric", action="append", metavar="NAME",
                   help="corpus report metrics (default: bleu chrf; 'none' disables)")
    _add_scorer_flags(p)
    p.add_argument("-o", "--output", help="output JSONL path (default stdout)")
    p.set_defaults(func=cmd_rerank)

    p = commands.add_parser("optimize", help="run the GA per case")
    p.add_argument("input")
    p.add_argument("--fitness", action="append", required=True, metavar="NAME",
                   help="fitness component, repeatable (summed)")
    p.add_argument("--mode", choices=("oracle", "mbr"), required=True)
    _add_scorer_flags(p)
    _add_ga_flags(p)
    p.add_argument("-o", "--output", help="output JSONL path (default stdout)")
    p.set_defaults(func=cmd_optimize)

    p = commands.add_parser("mine", help="mine adversarial examples for a metric")
    p.add_argument("input")
    p.add_argument("--objective", action="append", required=True, metavar="NAME",
                   help="objective metric component, repeatable (summed)")
    p.add_argument("--held-out", required=True, metavar="NAME")
    p.add_argument("--margins", nargs=2, type=float, default=[1e-3, 1e-3],
                   metavar=("M_OBJECTIVE", "M_HELD_OUT"))
    p.add_argument("--only-adversarial", action="store_true",
                   help="emit only records satisfying the adversarial predicate")
    _add_scorer_flags(p)
    _add_ga_flags(p)
    p.add_argument("-o", "--output", help="output JSONL path (default stdout)")
    p.set_defaults(func=cmd_mine)

    p = commands.add_parser("report", help="bootstrap CIs, significance, improve/degrade ratios")
    p.add_argument("system_a", help="TSV score file (header: metric names)")
    p.add_argument("system_b", help="TSV score file aligned with system_a")
    p.add_argument("--bootstrap-n", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--tsv", help="also write a TSV rendering to this path")
    p.add_argument("-o", "--output", help="output JSON path (default stdout)")
    p.set_defaults(func=cmd_report)

    p = commands.add_parser("rerun", help="replay a run from its manifest")
    p.add_argument("manifest", help="path to a .manifest.json file")
    p.add_argument("-o", "--output", help="override the output path")
    p.set_defaults(func=cmd_rerun)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, argv)
    except UsageError as exc:
        print(f"metric-ga: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ScorerTransportError, ScorerProtocolError) as exc:
        print(f"metric-ga: scorer error: {exc}", file=sys.stderr)
        return EXIT_SCORER
    except (CaseParseError, ValueError, OSError) as exc:
        print(f"metric-ga: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
