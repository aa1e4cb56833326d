"""Batch command-line interface.

Subcommands mirror the library: parsing/validation/extraction of single
generations, reward scoring, corpus statistics, cold-start dataset builds,
embedding initialization, offline policy-objective audits, entropy and
syntax analyses, pass@k, token-cost breakdowns, and the scoring server.
"""

from __future__ import annotations

import dataclasses
import json
import sys
from typing import Optional

import click

from . import analysis, coldstart, embeddings, grpo
from .parser import (DelimiterScheme, ParseError, ThinkBlock, block_stats,
                     extract_code, parse_mixed_sequence, validate_raw)
from .rewards import RewardConfig, combined_reward, structure_only_reward
from .sandbox import load_test_suite


def _load_scheme(path: Optional[str]) -> DelimiterScheme:
    if not path:
        return DelimiterScheme()
    with open(path) as f:
        return DelimiterScheme.from_dict(json.load(f))


def _load_config(path: Optional[str], scheme: DelimiterScheme) -> RewardConfig:
    if not path:
        return RewardConfig(scheme=scheme)
    with open(path) as f:
        d = json.load(f)
    return RewardConfig(scheme=scheme, **d)


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path) as f:
        return f.read()


def _emit(obj) -> None:
    click.echo(json.dumps(obj, indent=2, default=str))


@click.group()
@click.option("--scheme", "scheme_path", type=click.Path(exists=True),
              default=None, help="Delimiter scheme JSON file.")
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None, help="Reward config JSON file.")
@click.option("--jobs", type=int, default=4, show_default=True,
              help="Sandbox worker pool size.")
@click.pass_context
def main(ctx, scheme_path, config_path, jobs):
    ctx.ensure_object(dict)
    scheme = _load_scheme(scheme_path)
    ctx.obj["scheme"] = scheme
    ctx.obj["config"] = _load_config(config_path, scheme)
    ctx.obj["jobs"] = jobs


@main.command()
@click.argument("path")
@click.pass_context
def parse(ctx, path):
    """Parse a raw generation into its decomposition."""
    raw = _read_text(path)
    try:
        seq = parse_mixed_sequence(raw, ctx.obj["scheme"])
    except ParseError as e:
        _emit({"error": e.kind.value, "offset": e.offset, "message": str(e)})
        raise SystemExit(1)
    _emit({
        "upfront": seq.upfront,
        "segments": [{"type": "think" if isinstance(s, ThinkBlock) else "code",
                      "text": s.text} for s in seq.segments],
        "num_blocks": seq.num_blocks,
    })


@main.command()
@click.argument("path")
@click.pass_context
def validate(ctx, path):
    """Structural report for a raw generation."""
    report = validate_raw(_read_text(path), ctx.obj["scheme"])
    _emit({"has_initial_think": report.has_initial_think,
           "ta_block_count": report.ta_block_count,
           "violations": [{"kind": v.kind.value, "byte_offset": v.byte_offset}
                          for v in report.violations]})


@main.command()
@click.argument("path")
@click.pass_context
def extract(ctx, path):
    """Strip thinking blocks and print the executable code."""
    seq = parse_mixed_sequence(_read_text(path), ctx.obj["scheme"])
    click.echo(extract_code(seq), nl=False)


@main.command()
@click.argument("completion_path")
@click.option("--tests", "tests_path", type=click.Path(exists=True),
              default=None, help="Test suite JSON file.")
@click.pass_context
def score(ctx, completion_path, tests_path):
    """Score a completion: structure, correctness, combined total."""
    raw = _read_text(completion_path)
    cfg = ctx.obj["config"]
    if tests_path:
        with open(tests_path) as f:
            tests = load_test_suite(json.load(f))
        from .sandbox import Sandbox
        breakdown = combined_reward(raw, tests, cfg,
                                    Sandbox(max_workers=ctx.obj["jobs"]))
    else:
        breakdown = structure_only_reward(raw, cfg)
    _emit({"r_struct": breakdown.r_struct, "r_correct": breakdown.r_correct,
           "total": breakdown.total,
           "violations": [v.kind.value
                          for v in breakdown.structure_report.violations],
           "verdicts": [v.status.value for v in breakdown.verdicts]})


@main.command()
@click.argument("corpus_path")
@click.pass_context
def stats(ctx, corpus_path):
    """Inline-block frequency/length statistics over a trace-file corpus."""
    scheme_default = ctx.obj["scheme"]
    seqs, token_lens = [], []
    have_lens = True
    with open(corpus_path) as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            scheme = DelimiterScheme.from_dict(rec["scheme"]) \
                if "scheme" in rec else scheme_default
            seqs.append(parse_mixed_sequence(rec["raw"], scheme))
            if "token_lens" in rec:
                token_lens.append(rec["token_lens"])
            else:
                have_lens = False
    _emit(block_stats(seqs, token_lens if have_lens and token_lens else None))


@main.command("build-coldstart")
@click.argument("requirements_path")
@click.option("--out", required=True, type=click.Path())
@click.option("--target", type=int, required=True)
@click.option("--max-calls", type=int, default=None)
@click.option("--endpoint", default=None,
              help="Generation backend URL (TA_BACKEND_TOKEN for auth).")
@click.option("--timeout", type=float, default=60.0, show_default=True)
@click.pass_context
def build_coldstart(ctx, requirements_path, out, target, max_calls,
                    endpoint, timeout):
    """Build a cold-start dataset from a requirements file (one per line)."""
    with open(requirements_path) as f:
        requirements = [ln.strip() for ln in f if ln.strip()]
    if not endpoint:
        raise click.UsageError("--endpoint is required")
    backend = coldstart.HttpBackend(endpoint, timeout=timeout)
    samples, report = coldstart.build_dataset(
        requirements, backend, target, scheme=ctx.obj["scheme"],
        max_calls=max_calls)
    with open(out, "w") as f:
        coldstart.write_dataset(samples, f)
    _emit({"kept": report.kept, "dropped": report.dropped_by_reason,
           "total_calls": report.total_calls, "exhausted": report.exhausted})


@main.command("init-embeddings")
@click.argument("table_path")
@click.option("--out", required=True, type=click.Path())
@click.option("--open-anchor", default="<im_start>", show_default=True)
@click.option("--close-anchor", default="<im_end>", show_default=True)
@click.option("--open-name", default=embeddings.DEFAULT_OPEN_NAME,
              show_default=True)
@click.option("--close-name", default=embeddings.DEFAULT_CLOSE_NAME,
              show_default=True)
def init_embeddings(table_path, out, open_anchor, close_anchor,
                    open_name, close_name):
    """Append initialized trigger-token embeddings to a table file."""
    with open(table_path) as f:
        table = embeddings.read_table(f)
    embeddings.add_trigger_tokens(
        table, embeddings.AnchorNames(open=open_anchor, close=close_anchor),
        open_name=open_name, close_name=close_name)
    with open(out, "w") as f:
        embeddings.write_table(table, f)
    click.echo(f"wrote {out}")


@main.command("grpo-audit")
@click.argument("groups_path")
@click.option("--epsilon", type=float, default=0.2, show_default=True)
@click.option("--beta", type=float, default=0.001, show_default=True)
@click.option("--ratio-level", type=click.Choice(["token", "sequence"]),
              default="token", show_default=True)
def grpo_audit(groups_path, epsilon, beta, ratio_level):
    """Offline objective audit over a rollout-group JSONL file."""
    cfg = grpo.GrpoConfig(epsilon=epsilon, beta=beta, ratio_level=ratio_level)
    results = []
    with open(groups_path) as f:
        for line in f:
            if not line.strip():
                continue
            group = grpo.RolloutGroup.from_dict(json.loads(line))
            res = grpo.grpo_objective(group, cfg)
            results.append({"prompt_id": group.prompt_id,
                            "objective": res.objective,
                            "clip_fraction": res.clip_fraction,
                            "advantages": res.advantages,
                            "per_rollout": res.per_rollout})
    _emit(results)


def _load_traces(path: str) -> list[analysis.GenerationTrace]:
    traces = []
    with open(path) as f:
        for line in f:
            if line.strip():
                traces.append(analysis.GenerationTrace.from_dict(
                    json.loads(line)))
    return traces


@main.command("analyze-entropy")
@click.argument("traces_path")
@click.option("-n", "window", type=int, default=10, show_default=True)
def analyze_entropy(traces_path, window):
    """Entropy-window diffs over paired enabled/disabled traces."""
    traces = _load_traces(traces_path)
    by_pair: dict[str, list[analysis.GenerationTrace]] = {}
    for t in traces:
        by_pair.setdefault(t.pairing_id, []).append(t)
    out = []
    for pid, pair in by_pair.items():
        if len(pair) != 2:
            out.append({"pairing_id": pid, "error": "needs exactly 2 traces"})
            continue
        enabled = next((t for t in pair if analysis.ta_onsets(t)), pair[0])
        disabled = pair[1] if enabled is pair[0] else pair[0]
        diffs = analysis.entropy_diff(enabled, disabled, n=window)
        out.append({"pairing_id": pid,
                    "diffs": [{"position": d.position, "diff": d.diff,
                               "error": d.error} for d in diffs]})
    _emit(out)


@main.command("analyze-syntax")
@click.argument("corpus_path")
@click.pass_context
def analyze_syntax(ctx, corpus_path):
    """Histogram of syntactic categories at inline-thinking onsets."""
    profile = analysis.SyntaxProfile()
    corpus = []
    with open(corpus_path) as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            scheme = DelimiterScheme.from_dict(rec["scheme"]) \
                if "scheme" in rec else ctx.obj["scheme"]
            corpus.append((parse_mixed_sequence(rec["raw"], scheme), profile))
    hist = analysis.syntax_histogram(corpus)
    _emit({"ranked": [[cat.value, cnt] for cat, cnt in hist.ranked],
           "top5": [[cat.value, cnt] for cat, cnt in hist.top5],
           "total": hist.total})


@main.command()
@click.argument("n", type=int)
@click.argument("c", type=int)
@click.argument("k", type=int)
def passk(n, c, k):
    """Unbiased pass@k estimate from n samples with c correct."""
    click.echo(analysis.pass_at_k(n, c, k))


@main.command("token-cost")
@click.argument("traces_path")
def token_cost(traces_path):
    """Mean token counts per trace by block label."""
    breakdown = analysis.token_cost_breakdown(_load_traces(traces_path))
    _emit({"upfront_mean": breakdown.upfront_mean,
           "ta_mean": breakdown.ta_mean,
           "code_mean": breakdown.code_mean,
           "reasoning_cost": breakdown.reasoning_cost()})


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8700, show_default=True)
@click.option("--workers", type=int, default=4, show_default=True)
@click.option("--queue-depth", type=int, default=32, show_default=True)
@click.pass_context
def serve(ctx, host, port, workers, queue_depth):
    """Run the reward scoring service."""
    from .service import serve as run_service
    run_service(host=host, port=port, workers=workers,
                queue_depth=queue_depth, cfg=ctx.obj["config"])


if __name__ == "__main__":
    main()
