"""Command-line entry point.

Machine-readable results go to stdout (or --out), diagnostics and seed
headers to stderr.  Exit codes: 0 success, 1 usage error, 2 data error.
Every random stage expands one master seed through the documented
stage-name derivation, so any stage can be reproduced in isolation.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import corpusio, markov, profiling, results, service, stimuli
from .errors import WorkbenchError
from .freqdict import FreqDict, build_freq_dict, top_hit_rate
from .perplexity import perplexity_from_logprobs, perplexity_of_markov, read_logprob_file
from .profiling import CorpusProfile
from .rng import derive_seed

_CORPUS_FORMATS = click.Choice(["conllu", "plain"])
_REPORT_FORMATS = click.Choice(["json", "csv", "text"])


def read_config(path: Path) -> dict[str, str]:
    """KEY=VALUE lines; blank lines and #-comments ignored."""
    config: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise click.UsageError(f"{path}:{lineno}: expected KEY=VALUE, got {line!r}")
        config[key.strip()] = value.strip()
    return config


def _parse_bool(raw: str) -> bool:
    lowered = raw.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _resolve(ctx, key: str, explicit, default, cast=str):
    """Explicit flag beats config file beats built-in default."""
    if explicit is not None:
        return explicit
    config = ctx.obj or {}
    if key in config:
        try:
            return cast(config[key])
        except ValueError as exc:
            raise click.UsageError(f"config key {key}: {exc}") from exc
    return default


def _write_out(content: str, out_path: str) -> None:
    if out_path == "-":
        sys.stdout.write(content)
    else:
        Path(out_path).write_text(content, encoding="utf-8")


def _note(message: str) -> None:
    print(message, file=sys.stderr)


def _seed_header(command: str, master_seed: int, stage: str | None = None) -> None:
    if stage is None:
        _note(f"# command={command} seed={master_seed}")
    else:
        _note(
            f"# command={command} seed={master_seed} "
            f"stage={stage} stage_seed={derive_seed(master_seed, stage)}"
        )


def _json_doc(payload) -> str:
    return json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n"


@click.group()
@click.option(
    "--config", "config_path", default=None,
    type=click.Path(exists=True, dir_okay=False),
    help="KEY=VALUE defaults for options (seed, alpha, permille, ...).",
)
@click.pass_context
def cli(ctx: click.Context, config_path: str | None) -> None:
    """Evaluation workbench for generated text."""
    ctx.obj = read_config(Path(config_path)) if config_path else {}


# -- corpus statistics ------------------------------------------------------

@cli.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--format", "corpus_format", type=_CORPUS_FORMATS, default="conllu")
@click.option("--out", "out_path", default="-")
def profile(in_path: str, corpus_format: str, out_path: str) -> None:
    """Per-feature mean/std and POS distribution of a corpus, as JSON."""
    corpus = corpusio.read_corpus(in_path, corpus_format)
    prof = profiling.profile_corpus(corpus)
    _write_out(_json_doc(prof.to_dict()), out_path)
    _note(f"# profiled {corpus.sentence_count} sentences, {corpus.token_count} tokens")


@cli.command()
@click.option("--a", "a_path", required=True, type=click.Path(exists=True))
@click.option("--b", "b_path", required=True, type=click.Path(exists=True))
@click.option("--format", "report_format", type=_REPORT_FORMATS, default="text")
@click.option("--out", "out_path", default="-")
def compare(a_path: str, b_path: str, report_format: str, out_path: str) -> None:
    """Side-by-side report of two saved profiles."""
    profile_a = CorpusProfile.from_dict(json.loads(Path(a_path).read_text(encoding="utf-8")))
    profile_b = CorpusProfile.from_dict(json.loads(Path(b_path).read_text(encoding="utf-8")))
    report = profiling.compare_profiles(profile_a, profile_b)
    if report_format == "csv":
        content = report.to_csv()
    elif report_format == "text":
        content = report.to_text()
    else:
        content = _json_doc(report.to_dict())
    _write_out(content, out_path)


@cli.command(name="freqdict")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--format", "corpus_format", type=_CORPUS_FORMATS, default="conllu")
@click.option("--lowercase/--no-lowercase", "lowercase", default=None)
@click.option("--out", "out_path", required=True)
@click.pass_context
def freqdict_cmd(ctx, in_path: str, corpus_format: str, lowercase: bool | None,
                 out_path: str) -> None:
    """Build a frequency dictionary and save it as TSV."""
    lowercase = _resolve(ctx, "lowercase", lowercase, False, _parse_bool)
    corpus = corpusio.read_corpus(in_path, corpus_format)
    fdict = build_freq_dict(corpus, lowercase=lowercase)
    fdict.save_tsv(out_path)
    _note(f"# {len(fdict)} types, {fdict.total} tokens, lowercase={lowercase}")


@cli.command()
@click.option("--dict", "dict_path", required=True, type=click.Path(exists=True))
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--format", "corpus_format", type=_CORPUS_FORMATS, default="plain")
@click.option("--lowercase/--no-lowercase", "lowercase", default=None,
              help="Must match how the dictionary was built.")
@click.option("--permille", type=int, default=None)
@click.option("--out", "out_path", default="-")
@click.pass_context
def hitrate(ctx, dict_path: str, in_path: str, corpus_format: str,
            lowercase: bool | None, permille: int | None, out_path: str) -> None:
    """Share of corpus tokens covered by the dictionary's top permille."""
    lowercase = _resolve(ctx, "lowercase", lowercase, False, _parse_bool)
    permille = _resolve(ctx, "permille", permille, 5, int)
    fdict = FreqDict.load_tsv(dict_path, lowercased=lowercase)
    corpus = corpusio.read_corpus(in_path, corpus_format)
    tokens = list(corpus.token_forms())
    rate = top_hit_rate(tokens, fdict, permille)
    _write_out(
        _json_doc({"permille": permille, "tokens": len(tokens), "hit_rate": rate}),
        out_path,
    )


# -- markov baseline --------------------------------------------------------

@cli.command(name="markov-train")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--format", "corpus_format", type=_CORPUS_FORMATS, default="plain")
@click.option("--state-size", type=int, default=None)
@click.option("--out", "out_path", required=True)
@click.pass_context
def markov_train(ctx, in_path: str, corpus_format: str, state_size: int | None,
                 out_path: str) -> None:
    """Count n-gram transitions over a corpus and save the model."""
    state_size = _resolve(ctx, "state_size", state_size, 2, int)
    corpus = corpusio.read_corpus(in_path, corpus_format)
    model = markov.train(corpus.sentences(), state_size)
    markov.save_model(model, out_path)
    _note(
        f"# state_size={state_size} states={len(model.transitions)} "
        f"transitions={model.total_transition_count()} vocab={len(model.vocab)}"
    )


@cli.command(name="markov-generate")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--n", "count", type=int, default=10)
@click.option("--max-tokens", type=int, default=50)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_path", default="-")
@click.pass_context
def markov_generate(ctx, model_path: str, count: int, max_tokens: int,
                    seed: int | None, out_path: str) -> None:
    """Sample sentences from a saved model, one per line."""
    seed = _resolve(ctx, "seed", seed, 0, int)
    _seed_header("markov-generate", seed)
    model = markov.load_model(model_path)
    lines = []
    for i in range(count):
        tokens = markov.generate(
            model, max_tokens, derive_seed(seed, f"markov-generate/{i}")
        )
        lines.append(" ".join(tokens))
    _write_out("".join(line + "\n" for line in lines), out_path)


@cli.command(name="markov-continue")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--prompts", "prompts_path", required=True, type=click.Path(exists=True))
@click.option("--n-tokens", type=int, default=10)
@click.option("--system", default="baseline")
@click.option("--seed", type=int, default=None)
@click.option("--max-attempts", type=int, default=100,
              help="Redraws allowed when a continuation ends early.")
@click.option("--out", "out_path", required=True)
@click.pass_context
def markov_continue(ctx, model_path: str, prompts_path: str, n_tokens: int,
                    system: str, seed: int | None, max_attempts: int,
                    out_path: str) -> None:
    """Continue every saved prompt (both lengths) and write completion records."""
    seed = _resolve(ctx, "seed", seed, 0, int)
    _seed_header("markov-continue", seed)
    model = markov.load_model(model_path)
    pairs = stimuli.load_prompts(prompts_path)
    records = []
    for pair in pairs:
        for prompt_len in stimuli.PROMPT_LENGTHS:
            prompt = pair.prompt(prompt_len)
            tokens: list[str] | None = None
            for attempt in range(max_attempts):
                stage = f"markov-continue/{pair.prompt_id}/{prompt_len}/{attempt}"
                continuation = markov.continue_from(
                    model, prompt, n_tokens, derive_seed(seed, stage)
                )
                if len(continuation.tokens) >= n_tokens:
                    tokens = continuation.tokens
                    break
            if tokens is None:
                raise stimuli.CompletionTooShort(
                    f"prompt {pair.prompt_id} (len {prompt_len}): no draw reached "
                    f"{n_tokens} tokens in {max_attempts} attempts"
                )
            records.append(
                {
                    "prompt_id": pair.prompt_id,
                    "prompt_len": prompt_len,
                    "system": system,
                    "tokens": tokens,
                }
            )
    content = "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records)
    Path(out_path).write_text(content, encoding="utf-8")
    _note(f"# wrote {len(records)} completions for {len(pairs)} prompts")


@cli.command(name="markov-score")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--format", "corpus_format", type=_CORPUS_FORMATS, default="plain")
@click.option("--alpha", type=float, default=None)
@click.option("--out", "out_path", default="-")
@click.pass_context
def markov_score(ctx, model_path: str, in_path: str, corpus_format: str,
                 alpha: float | None, out_path: str) -> None:
    """Smoothed log-probability of every sentence, one JSON record per line."""
    alpha = _resolve(ctx, "alpha", alpha, 0.1, float)
    model = markov.load_model(model_path)
    corpus = corpusio.read_corpus(in_path, corpus_format)
    lines = []
    for sentence in corpus.sentences():
        forms = sentence.forms()
        record = {
            "tokens": len(forms) + 1,
            "logprob": markov.score(model, forms, alpha),
        }
        if sentence.source_id is not None:
            record["source_id"] = sentence.source_id
        lines.append(json.dumps(record, ensure_ascii=False))
    _write_out("".join(line + "\n" for line in lines), out_path)
    _note(f"# alpha={alpha} sentences={len(lines)}")


# -- perplexity -------------------------------------------------------------

def _render_ppl(report, report_format: str) -> str:
    if report_format == "csv":
        return report.to_csv()
    if report_format == "text":
        return report.to_text()
    return _json_doc(report.to_dict())


@cli.command(name="ppl-logprobs")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--report-format", type=_REPORT_FORMATS, default="json")
@click.option("--out", "out_path", default="-")
def ppl_logprobs(in_path: str, report_format: str, out_path: str) -> None:
    """Perplexity from a per-token log-probability file.

    doc_id values shaped like "domain/rest" group into domains; everything
    else pools under "all".
    """
    header, records = read_logprob_file(in_path)
    report = perplexity_from_logprobs(
        records,
        domain_of=lambda doc_id: doc_id.split("/", 1)[0] if "/" in doc_id else "all",
        unit=str(header.get("unit", "token")),
    )
    _write_out(_render_ppl(report, report_format), out_path)


@cli.command(name="ppl-markov")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--format", "corpus_format", type=_CORPUS_FORMATS, default="plain")
@click.option("--alpha", type=float, default=None)
@click.option("--report-format", type=_REPORT_FORMATS, default="json")
@click.option("--out", "out_path", default="-")
@click.pass_context
def ppl_markov(ctx, model_path: str, in_path: str, corpus_format: str,
               alpha: float | None, report_format: str, out_path: str) -> None:
    """Perplexity of a corpus under a saved model's smoothed scorer."""
    alpha = _resolve(ctx, "alpha", alpha, 0.1, float)
    model = markov.load_model(model_path)
    corpus = corpusio.read_corpus(in_path, corpus_format)
    report = perplexity_of_markov(model, corpus, alpha)
    _write_out(_render_ppl(report, report_format), out_path)
    _note(f"# alpha={alpha}")


# -- human evaluation pipeline ----------------------------------------------

@cli.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--format", "corpus_format", type=_CORPUS_FORMATS, default="conllu")
@click.option("--n", "count", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_path", required=True)
@click.pass_context
def prompts(ctx, in_path: str, corpus_format: str, count: int | None,
            seed: int | None, out_path: str) -> None:
    """Sample prompt sentences and store their 5/10-token prefixes."""
    seed = _resolve(ctx, "seed", seed, 0, int)
    count = _resolve(ctx, "n_prompts", count, 100, int)
    _seed_header("prompts", seed, "prompts")
    corpus = corpusio.read_corpus(in_path, corpus_format)
    pairs = stimuli.select_prompts(corpus, count, derive_seed(seed, "prompts"))
    stimuli.save_prompts(pairs, out_path)
    _note(f"# selected {len(pairs)} prompts")


@cli.command(name="stimuli")
@click.option("--prompts", "prompts_path", required=True, type=click.Path(exists=True))
@click.option("--completions", "completion_paths", multiple=True,
              type=click.Path(exists=True))
@click.option("--out-dir", "out_dir", required=True)
def stimuli_cmd(prompts_path: str, completion_paths: tuple[str, ...],
                out_dir: str) -> None:
    """Cross prompts with completions into the full stimulus material."""
    pairs = stimuli.load_prompts(prompts_path)
    completions = stimuli.read_completions(list(completion_paths))
    sset = stimuli.build_stimulus_set(pairs, completions)
    stimuli.save_stimulus_set(sset, out_dir)
    _note(f"# built {len(sset.stimuli)} stimuli from {len(pairs)} prompts")


@cli.command()
@click.option("--stimuli-dir", "stimuli_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--task", type=click.Choice(["ranking", "classification"]),
              required=True)
@click.option("--subjects-file", type=click.Path(exists=True, dir_okay=False),
              default=None, help="One subject id per line.")
@click.option("--n-subjects", type=int, default=None,
              help="Generate ids s001.. instead of reading a file.")
@click.option("--mode", type=click.Choice(["balanced", "random"]), default=None,
              help="Classification cell assignment; balanced is a Latin square.")
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_path", required=True)
@click.pass_context
def assign(ctx, stimuli_dir: str, task: str, subjects_file: str | None,
           n_subjects: int | None, mode: str | None, seed: int | None,
           out_path: str) -> None:
    """Build one session plan per subject."""
    seed = _resolve(ctx, "seed", seed, 0, int)
    mode = _resolve(ctx, "assignment_mode", mode, "balanced")
    if (subjects_file is None) == (n_subjects is None):
        raise click.UsageError("give exactly one of --subjects-file / --n-subjects")
    if subjects_file is not None:
        subjects = [
            line.strip()
            for line in Path(subjects_file).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
    else:
        width = max(3, len(str(n_subjects)))
        subjects = [f"s{i:0{width}d}" for i in range(1, n_subjects + 1)]
    _seed_header("assign", seed)
    sset = stimuli.load_stimulus_set(stimuli_dir)
    if task == "ranking":
        plans = stimuli.assign_ranking(sset, subjects, seed)
    else:
        plans = stimuli.assign_classification(
            sset, subjects, seed, balanced=(mode == "balanced")
        )
    stimuli.save_plans(plans, out_path)
    _note(f"# {len(plans)} {task} plans, {len(plans[0].items)} items each, mode={mode}")


@cli.command()
@click.option("--stimuli-dir", "stimuli_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--plans", "plan_paths", multiple=True, required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--log", "log_path", required=True)
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.option("--ui", "ui_dir", type=click.Path(exists=True, file_okay=False),
              default=None)
@click.pass_context
def serve(ctx, stimuli_dir: str, plan_paths: tuple[str, ...], log_path: str,
          host: str | None, port: int | None, ui_dir: str | None) -> None:
    """Run the annotation service (admin export needs EVAL_ADMIN_TOKEN)."""
    host = _resolve(ctx, "host", host, "127.0.0.1")
    port = _resolve(ctx, "port", port, 8765, int)
    sset = stimuli.load_stimulus_set(stimuli_dir)
    plans = [plan for path in plan_paths for plan in stimuli.load_plans(path)]
    store = service.EvalStore(plans, sset, log_path)
    _note(f"# serving {len(plans)} plans on {host}:{port}, log={log_path}")
    service.serve(store, host=host, port=port, ui_dir=ui_dir)


@cli.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--task", type=click.Choice(["ranking", "classification", "both"]),
              default="both")
@click.option("--format", "report_format", type=_REPORT_FORMATS, default="text")
@click.option("--out", "out_path", default="-")
def aggregate(in_path: str, task: str, report_format: str, out_path: str) -> None:
    """Turn exported annotation records into percentage tables."""
    records = results.read_records_jsonl(in_path)
    tables: list[results.ResultTable] = []
    if task in ("ranking", "both"):
        subset = [r for r in records if r.get("task") == "ranking"]
        if subset or task == "ranking":
            tables.append(results.aggregate_ranking(subset))
    if task in ("classification", "both"):
        subset = [r for r in records if r.get("task") == "classification"]
        if subset or task == "classification":
            tables.append(results.aggregate_classification(subset))
    _write_out(results.render_report(tables, report_format), out_path)


def main(argv: list[str] | None = None) -> int:
    """Run the CLI without exiting the interpreter; returns the exit code."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return 1
    except click.exceptions.Abort:
        return 1
    except WorkbenchError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error [json]: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error [io]: {exc}", file=sys.stderr)
        return 2
    return 0


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
