"""Command-line front end: design runs, batch campaigns, and utilities.

Exit codes: 0 success, 1 search failure, 2 invalid input, 70 internal
error (a reported success failed re-verification).  Every option can also
be set through environment variables with the PKINV_ prefix, for example
PKINV_INVERSE_SEED.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import click

from .loops import build_intervals
from .oracle import DEFAULT_MODEL, EnergyModel, ReferenceFoldOracle
from .search import SearchConfig, SearchFailed, inverse_fold
from .sequences import validate_sequence
from .structure import (
    ValidationPolicy,
    parse_structure,
    serialize_structure,
    structure_distance,
    validate_target,
)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INVALID = 2
EXIT_INTERNAL = 70

_STRUCTURE_CHARS = set(":.()[]{}")


def _read_structure_argument(value: str) -> str:
    """Accept a literal bracket string or a path to a file holding one."""
    if value and set(value) <= _STRUCTURE_CHARS:
        return value
    if os.path.exists(value):
        for line in open(value):
            line = line.strip()
            if line:
                return line
        raise click.ClickException(f"no structure found in {value}")
    return value  # let the parser report the offending character


def _load_model(path: str | None) -> EnergyModel:
    if path is None:
        return DEFAULT_MODEL
    try:
        return EnergyModel.from_file(path)
    except (OSError, ValueError) as exc:
        raise click.ClickException(f"cannot load energy model: {exc}")


@dataclass(frozen=True)
class _TrialSpec:
    target_text: str
    seed: int
    trial: int
    n_best: int
    k: int
    sigma: int
    min_arc_length: int
    model_items: tuple[tuple[str, float], ...]
    penalties: tuple[float, float, float, float, float]
    want_trace: bool


def _run_trial(spec: _TrialSpec) -> dict:
    model = EnergyModel(
        pair_scores=spec.model_items,
        hairpin=spec.penalties[0],
        interior=spec.penalties[1],
        stacked=spec.penalties[2],
        multi=spec.penalties[3],
        pseudoknot=spec.penalties[4],
    )
    policy = ValidationPolicy(spec.k, spec.sigma, spec.min_arc_length)
    oracle = ReferenceFoldOracle(policy, model)
    config = SearchConfig(n_best=spec.n_best, rng_seed=spec.seed)
    started = time.perf_counter()
    try:
        result = inverse_fold(spec.target_text, oracle, config)
        record = {
            "trial": spec.trial,
            "seed": spec.seed,
            "target": spec.target_text,
            "success": True,
            "sequence": result.sequence,
            "oracle_calls": result.oracle_calls,
        }
        trace = result.trace
    except SearchFailed as failure:
        record = {
            "trial": spec.trial,
            "seed": spec.seed,
            "target": spec.target_text,
            "success": False,
            "sequence": None,
            "oracle_calls": failure.oracle_calls,
        }
        trace = failure.trace
    record["_elapsed"] = time.perf_counter() - started
    if spec.want_trace:
        record["_trace"] = trace.to_jsonl()
    return record


@click.group(context_settings={"auto_envvar_prefix": "PKINV"})
@click.version_option(package_name="pkinv")
def main():
    """Inverse folding of crossing RNA structures, with utilities."""


@main.command()
@click.option("--target", required=True, help="Bracket string or file with one.")
@click.option("--trials", default=1, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--n-best", "-N", "n_best", default=50, show_default=True, type=int,
              help="Suboptimal list size used while adjusting.")
@click.option("--k", default=3, show_default=True, type=int)
@click.option("--sigma", default=3, show_default=True, type=int)
@click.option("--min-arc-length", default=4, show_default=True, type=int)
@click.option("--model", "model_path", default=None, type=click.Path(),
              help="Energy model config file (key=value lines).")
@click.option("--format", "fmt", default="text", show_default=True,
              type=click.Choice(["text", "jsonl", "tsv"]))
@click.option("--jobs", default=1, show_default=True, type=int,
              help="Parallel trials; output is identical for any value.")
@click.option("--trace", "trace_path", default=None, type=click.Path(),
              help="Write the search trace of each trial as JSON lines.")
@click.pass_context
def inverse(ctx, target, trials, seed, n_best, k, sigma, min_arc_length,
            model_path, fmt, jobs, trace_path):
    """Find sequences folding into the target; batch mode prints a report."""
    target_text = _read_structure_argument(target)
    model = _load_model(model_path)
    try:
        policy = ValidationPolicy(k, sigma, min_arc_length)
        parsed = parse_structure(target_text)
    except ValueError as exc:
        click.echo("incorrect structure")
        click.echo(str(exc))
        ctx.exit(EXIT_INVALID)
    violations = validate_target(parsed, policy)
    if violations:
        click.echo("incorrect structure")
        for violation in violations:
            click.echo(f"  {violation}")
        ctx.exit(EXIT_INVALID)

    penalties = (model.hairpin, model.interior, model.stacked, model.multi,
                 model.pseudoknot)
    specs = [
        _TrialSpec(target_text, seed + trial, trial, n_best, k, sigma,
                   min_arc_length, model.pair_scores, penalties,
                   trace_path is not None)
        for trial in range(trials)
    ]
    started = time.perf_counter()
    if jobs > 1 and trials > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_trial, specs))
    else:
        records = [_run_trial(spec) for spec in specs]
    total_time = time.perf_counter() - started
    records.sort(key=lambda r: r["trial"])

    verifier = ReferenceFoldOracle(policy, model)
    for record in records:
        if record["success"]:
            refolded = verifier.fold(record["sequence"], 1).mfe
            if structure_distance(refolded, parsed) != 0:
                click.echo("internal error: reported success failed re-verification",
                           err=True)
                ctx.exit(EXIT_INTERNAL)

    if trace_path:
        with open(trace_path, "w") as handle:
            for record in records:
                for line in record.pop("_trace").splitlines():
                    event = json.loads(line)
                    event["trial"] = record["trial"]
                    handle.write(json.dumps(event, sort_keys=True) + "\n")

    successes = sum(record["success"] for record in records)
    times = [record.pop("_elapsed") for record in records]
    if fmt == "jsonl":
        for record in records:
            click.echo(json.dumps(record, sort_keys=True))
        click.echo(json.dumps(
            {"report": True, "trials": trials, "successes": successes},
            sort_keys=True))
    elif fmt == "tsv":
        click.echo("trial\tseed\tsuccess\tsequence\toracle_calls")
        for record in records:
            click.echo("\t".join(str(record[key]) for key in
                                 ("trial", "seed", "success", "sequence",
                                  "oracle_calls")))
    else:
        click.echo(f"target  {target_text}")
        for record in records:
            if record["success"]:
                click.echo(record["sequence"])
            else:
                click.echo("Failed!")
        mean_time = sum(times) / len(times) if times else 0.0
        p90 = sorted(times)[max(0, int(0.9 * len(times)) - 1)] if times else 0.0
        click.echo(
            f"report  length={parsed.n} trials={trials} successes={successes} "
            f"rate={100.0 * successes / max(trials, 1):.1f}% "
            f"total_time={total_time:.2f}s mean_time={mean_time:.3f}s "
            f"p90_time={p90:.3f}s seeds={seed}..{seed + trials - 1}"
        )
    ctx.exit(EXIT_OK if successes == trials else EXIT_FAILED)


@main.command("fold")
@click.argument("sequence")
@click.option("--n-best", "-N", "n_best", default=1, show_default=True, type=int)
@click.option("--k", default=3, show_default=True, type=int)
@click.option("--sigma", default=3, show_default=True, type=int)
@click.option("--min-arc-length", default=4, show_default=True, type=int)
@click.option("--model", "model_path", default=None, type=click.Path())
@click.pass_context
def fold_cmd(ctx, sequence, n_best, k, sigma, min_arc_length, model_path):
    """Print the n best structures for a sequence as TSV."""
    model = _load_model(model_path)
    try:
        validate_sequence(sequence)
        oracle = ReferenceFoldOracle(ValidationPolicy(k, sigma, min_arc_length),
                                     model)
        result = oracle.fold(sequence, n_best)
    except ValueError as exc:
        click.echo(str(exc), err=True)
        ctx.exit(EXIT_INVALID)
    for struct, energy in zip(result.structures, result.energies):
        click.echo(f"{serialize_structure(struct)}\t{energy:g}")


@main.command("distance")
@click.argument("first")
@click.argument("second")
@click.pass_context
def distance_cmd(ctx, first, second):
    """Print the structure distance between two bracket strings."""
    try:
        d = structure_distance(
            parse_structure(_read_structure_argument(first)),
            parse_structure(_read_structure_argument(second)),
        )
    except ValueError as exc:
        click.echo(str(exc), err=True)
        ctx.exit(EXIT_INVALID)
    click.echo(str(d))


@main.command("decompose")
@click.argument("target")
@click.pass_context
def decompose_cmd(ctx, target):
    """Print the loop components and the interval ladder of a structure."""
    try:
        struct = parse_structure(_read_structure_argument(target))
        plan = build_intervals(struct)
    except ValueError as exc:
        click.echo(str(exc), err=True)
        ctx.exit(EXIT_INVALID)
    for comp in plan.components:
        click.echo(
            f"{comp.kind}\ta=[{comp.span[0]},{comp.span[1]}]"
            f"\tb=[{comp.padded_span[0]},{comp.padded_span[1]}]"
        )
    click.echo(
        "intervals\t" + " ".join(f"[{lo},{hi}]" for lo, hi in plan.intervals)
    )


if __name__ == "__main__":
    main()
