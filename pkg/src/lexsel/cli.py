"""Command-line entry point wiring the pipeline end to end.

Data goes to files under --out (plus a manifest per run); diagnostics are
JSON lines on stderr. Exit codes: 0 success, 1 domain error, 2 usage
error. Endpoint credentials come only from the environment.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from lexsel import __version__, align, corpus as corpus_mod, dataset, evaluate as eval_mod
from lexsel import manifest as manifest_mod, mine as mine_mod, rules as rules_mod
from lexsel.annotate.agreement import agreement as compute_agreement
from lexsel.annotate.agreement import judgment_matrix
from lexsel.annotate import server as server_mod
from lexsel.annotate import store as store_mod
from lexsel.annotate import tasks as tasks_mod
from lexsel.endpoint import HttpChatEndpoint, load_endpoint_config, parse_config_text
from lexsel.errors import LexselError
from lexsel.logs import emit, setup_logging


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def _resolve(flag_value, config: dict, key: str, default, cast=None):
    """Precedence: explicit flag, then config file, then the default."""
    if flag_value is not None:
        return flag_value
    if key in config:
        raw = config[key]
        return cast(raw) if cast is not None else raw
    return default


def _parse_seeds(text: str) -> tuple[int, ...]:
    try:
        seeds = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise click.BadParameter(f"seeds must be comma-separated integers, got {text!r}")
    if not seeds:
        raise click.BadParameter("need at least one seed")
    return seeds


@click.group()
@click.version_option(version=__version__, prog_name="lexsel")
@click.option("--log-level", default="info", show_default=True,
              type=click.Choice(["debug", "info", "warning", "error"]))
def cli(log_level: str):
    setup_logging(log_level)


@cli.command("mine")
@click.option("--corpus", "corpus_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--min-count", type=int, default=None, help="Per-variation count floor.")
@click.option("--entropy", "entropy_threshold", type=float, default=None,
              help="Entropy floor in nats.")
@click.option("--min-variations", type=int, default=None)
@click.option("--sense-filter/--no-sense-filter", "sense_filter", default=None)
def mine_cmd(corpus_path, out_dir, config_path, min_count, entropy_threshold,
             min_variations, sense_filter):
    """Mine concepts with context-dependent translations from a corpus."""
    config = _load_config(config_path)
    min_count = _resolve(min_count, config, "min_count", mine_mod.MIN_COUNT, int)
    entropy_threshold = _resolve(
        entropy_threshold, config, "entropy", mine_mod.ENTROPY_THRESHOLD, float)
    min_variations = _resolve(
        min_variations, config, "min_variations", mine_mod.MIN_VARIATIONS, int)
    sense_filter = _resolve(sense_filter, config, "sense_filter", True,
                            lambda v: v.lower() in ("true", "1", "yes"))
    if entropy_threshold < 0:
        raise click.BadParameter("entropy threshold must be >= 0", param_hint="--entropy")
    if min_count < 1:
        raise click.BadParameter("min count must be >= 1", param_hint="--min-count")
    if min_variations < 2:
        raise click.BadParameter("need >= 2 variations", param_hint="--min-variations")

    corp = corpus_mod.load_corpus_jsonl(corpus_path)
    concepts = mine_mod.extract_concepts(
        corp, min_count=min_count, min_variations=min_variations,
        entropy_threshold=entropy_threshold, sense_filter=sense_filter)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    concepts_path = out / "concepts.jsonl"
    mine_mod.save_concepts_jsonl(concepts, concepts_path)
    emit("mined", concepts=len(concepts), corpus=str(corpus_path))
    manifest_mod.write_manifest(
        out, "mine",
        {"min_count": min_count, "entropy": entropy_threshold,
         "min_variations": min_variations, "sense_filter": sense_filter},
        inputs={"corpus": corpus_path}, outputs={"concepts": concepts_path})


@cli.command("align")
@click.option("--corpus", "corpus_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--iterations", type=int, default=align.DEFAULT_ITERATIONS, show_default=True)
def align_cmd(corpus_path, out_dir, iterations):
    """Train the word aligner and write alignments plus the lexicon table."""
    if iterations < 1:
        raise click.BadParameter("iterations must be >= 1", param_hint="--iterations")
    corp = corpus_mod.load_corpus_jsonl(corpus_path)
    table = align.train_model1(corp, iterations=iterations)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table_path = out / "table.jsonl"
    align.save_table_jsonl(table, table_path)
    pharaoh_path = out / "alignments.pharaoh"
    with open(pharaoh_path, "w", encoding="utf-8") as fh:
        for links in align.align_corpus(table, corp):
            fh.write(align.format_pharaoh(links) + "\n")
    aligned_path = out / "corpus_aligned.jsonl"
    aligned = corpus_mod.attach_alignments(corp, pharaoh_path)
    corpus_mod.save_corpus_jsonl(aligned, aligned_path)
    emit("aligned", pairs=len(corp), iterations=iterations,
         final_loglik=table.log_likelihood_history[-1])
    manifest_mod.write_manifest(
        out, "align", {"iterations": iterations},
        inputs={"corpus": corpus_path},
        outputs={"table": table_path, "alignments": pharaoh_path,
                 "corpus_aligned": aligned_path})


@cli.command("build-dataset")
@click.option("--concepts", "concepts_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--corpus", "corpus_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--max-concepts", type=int, default=None)
@click.option("--per-concept", type=int, default=None)
@click.option("--max-deviation", type=float, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
def build_dataset_cmd(concepts_path, corpus_path, out_dir, config_path,
                      max_concepts, per_concept, max_deviation, seed):
    """Filter concepts for uniform usage and sample candidate items."""
    config = _load_config(config_path)
    max_concepts = _resolve(max_concepts, config, "max_concepts", dataset.MAX_CONCEPTS, int)
    per_concept = _resolve(per_concept, config, "per_concept", dataset.PER_CONCEPT, int)
    max_deviation = _resolve(
        max_deviation, config, "max_deviation", dataset.MAX_DEVIATION, float)
    if max_concepts < 1 or per_concept < 1:
        raise click.BadParameter("concept and item counts must be >= 1")
    if not 0 <= max_deviation <= 1:
        raise click.BadParameter("max deviation must be in [0, 1]",
                                 param_hint="--max-deviation")
    concepts = mine_mod.load_concepts_jsonl(concepts_path)
    corp = corpus_mod.load_corpus_jsonl(corpus_path)
    uniform = dataset.uniformity_filter(concepts, max_deviation)
    items = dataset.sample_task(uniform, corp, max_concepts=max_concepts,
                                per_concept=per_concept, seed=seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    items_path = out / "dataset.jsonl"
    dataset.save_items_jsonl(items, items_path, corp.language_pair)
    emit("dataset_built", concepts_in=len(concepts), concepts_uniform=len(uniform),
         items=len(items))
    manifest_mod.write_manifest(
        out, "build-dataset",
        {"max_concepts": max_concepts, "per_concept": per_concept,
         "max_deviation": max_deviation, "seed": seed},
        inputs={"concepts": concepts_path, "corpus": corpus_path},
        outputs={"dataset": items_path})


@cli.command("make-session")
@click.option("--dataset", "dataset_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--annotators", required=True,
              help="Comma-separated opaque annotator ids.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--kind", default=tasks_mod.KIND_LEXICAL_SELECTION, show_default=True,
              type=click.Choice(list(tasks_mod.KINDS)))
def make_session_cmd(dataset_path, annotators, out_dir, seed, kind):
    """Build a per-annotator annotation session from dataset items."""
    annotator_ids = [a.strip() for a in annotators.split(",") if a.strip()]
    if not annotator_ids:
        raise click.BadParameter("need at least one annotator id",
                                 param_hint="--annotators")
    if kind != tasks_mod.KIND_LEXICAL_SELECTION:
        raise click.BadParameter(
            f"{kind} sessions are built from concepts or rules, not a dataset file",
            param_hint="--kind")
    items, _, _ = dataset.load_items_jsonl(dataset_path)
    try:
        session = tasks_mod.create_session(items, annotator_ids, seed=seed, kind=kind)
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint="--annotators")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    session_path = out / "session.json"
    tasks_mod.save_session(session, session_path)
    emit("session_created", session=session.id, tasks=len(session.tasks),
         annotators=len(annotator_ids))
    manifest_mod.write_manifest(
        out, "make-session",
        {"seed": seed, "kind": kind, "annotators": annotator_ids},
        inputs={"dataset": dataset_path}, outputs={"session": session_path})


@cli.command("serve-annotation")
@click.option("--session", "session_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--port", type=int, default=8000, show_default=True,
              help="0 binds an ephemeral port, announced on stderr.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--judgments", "judgments_path", type=click.Path(dir_okay=False),
              default=None, help="Journal file (default: next to the session).")
@click.option("--static", "static_dir", type=click.Path(file_okay=False), default=None,
              help="Directory of web UI assets to serve at /.")
def serve_annotation_cmd(session_path, port, host, judgments_path, static_dir):
    """Serve an annotation session over HTTP until interrupted."""
    server_mod.serve(session_path, port=port, host=host,
                     judgments_path=judgments_path, static_dir=static_dir)


@cli.command("finalize")
@click.option("--dataset", "dataset_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--session", "session_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--judgments", "judgments_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def finalize_cmd(dataset_path, session_path, judgments_path, out_dir):
    """Accept items whose gold a strict majority of annotators reproduced."""
    items, _, language_pair = dataset.load_items_jsonl(dataset_path)
    session = tasks_mod.load_session(session_path)
    store = store_mod.JudgmentStore(judgments_path)
    votes: dict[str, list[str]] = {}
    for (task_id, _), judgment in sorted(store.latest().items()):
        votes.setdefault(tasks_mod.task_ref(task_id), []).append(judgment.value)
    split = dataset.finalize(items, votes, language_pair=language_pair)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    final_path = out / "dataset_final.jsonl"
    dataset.save_split(split, final_path)
    emit("finalized", items=len(split.items),
         accepted=len(split.accepted_items()),
         acceptance_fraction=round(split.acceptance_fraction, 4),
         session=session.id)
    manifest_mod.write_manifest(
        out, "finalize", {"acceptance_rule": split.acceptance_rule},
        inputs={"dataset": dataset_path, "session": session_path,
                "judgments": judgments_path},
        outputs={"dataset_final": final_path})


@cli.command("agreement")
@click.option("--judgments", "judgments_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--annotators", default=None,
              help="Comma-separated column order (default: observed, sorted).")
def agreement_cmd(judgments_path, annotators):
    """Agreement statistics over a judgment journal, printed as JSON."""
    journal = store_mod.load_judgments(judgments_path)
    annotator_ids = (
        [a.strip() for a in annotators.split(",") if a.strip()] if annotators else None)
    matrix, refs, columns = judgment_matrix(journal, annotator_ids)
    if not matrix:
        raise LexselError("no items judged by every annotator; nothing to agree on")
    if len(columns) < 2:
        raise LexselError(f"agreement needs >= 2 annotators, found {len(columns)}")
    report = compute_agreement(matrix)
    click.echo(json.dumps(
        {**report.to_json(), "annotators": columns, "n_journal_entries": len(journal)},
        ensure_ascii=False, sort_keys=True, indent=2))


@cli.command("gen-rules")
@click.option("--concepts", "concepts_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--corpus", "corpus_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--endpoint", "endpoint_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--target-language", required=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--max-workers", type=int, default=4, show_default=True)
def gen_rules_cmd(concepts_path, corpus_path, endpoint_path, target_language,
                  out_dir, max_workers):
    """Generate per-variation usage rules with a chat model."""
    concepts = mine_mod.load_concepts_jsonl(concepts_path)
    corp = corpus_mod.load_corpus_jsonl(corpus_path)
    endpoint = load_endpoint_config(endpoint_path)
    client = HttpChatEndpoint(endpoint)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cache = rules_mod.RuleCache(out / "cache")
    rulesets = rules_mod.generate_rules_bulk(
        client, concepts, corp, target_language, cache=cache, max_workers=max_workers)
    rules_path = out / "rules.jsonl"
    rules_mod.save_rules_jsonl(rulesets, rules_path)
    emit("rules_generated", concepts=len(concepts), rulesets=len(rulesets),
         model=endpoint.model_name)
    manifest_mod.write_manifest(
        out, "gen-rules",
        {"target_language": target_language, "model": endpoint.model_name,
         "max_workers": max_workers},
        inputs={"concepts": concepts_path, "corpus": corpus_path,
                "endpoint": endpoint_path},
        outputs={"rules": rules_path})


@cli.command("eval")
@click.option("--dataset", "dataset_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--setting", required=True,
              type=click.Choice(["no_rules", "self_rules", "external_rules",
                                 "nmt", "baseline"]))
@click.option("--endpoint", "endpoint_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--rules", "rules_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--translations", "translations_path",
              type=click.Path(exists=True, dir_okay=False))
@click.option("--seeds", default="1,2,3", show_default=True)
@click.option("--target-language", default="the target language", show_default=True)
@click.option("--accepted-only/--all-items", default=True, show_default=True)
@click.option("--max-workers", type=int, default=1, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def eval_cmd(dataset_path, setting, endpoint_path, rules_path, translations_path,
             seeds, target_language, accepted_only, max_workers, out_dir):
    """Score a model, translation output, or the frequency baseline."""
    seed_values = _parse_seeds(seeds)
    setting = {"baseline": eval_mod.SETTING_BASELINE}.get(setting, setting)
    split = dataset.load_split(dataset_path)
    items = list(split.accepted_items()) if accepted_only else list(split.items)
    if not items:
        raise LexselError(f"dataset {dataset_path} has no usable items")

    client = None
    rules_by_concept = None
    translations = None
    if setting in (eval_mod.SETTING_NO_RULES, *eval_mod.RULE_SETTINGS):
        if endpoint_path is None:
            raise click.BadParameter(f"setting {setting} needs --endpoint",
                                     param_hint="--endpoint")
        client = HttpChatEndpoint(load_endpoint_config(endpoint_path))
    if setting in eval_mod.RULE_SETTINGS:
        if rules_path is None:
            raise click.BadParameter(f"setting {setting} needs --rules",
                                     param_hint="--rules")
        rules_by_concept = {rs.concept: rs
                           for rs in rules_mod.load_rules_jsonl(rules_path)}
    if setting == eval_mod.SETTING_NMT:
        if translations_path is None:
            raise click.BadParameter("nmt setting needs --translations",
                                     param_hint="--translations")
        translations = eval_mod.load_translations_jsonl(translations_path)

    report = eval_mod.evaluate(
        items, setting, client=client, translations=translations,
        rules=rules_by_concept, seeds=seed_values,
        target_language=target_language, max_workers=max_workers)
    out = Path(out_dir)
    report_path, records_path = eval_mod.save_report(report, out)
    emit("evaluated", setting=setting, items=len(items),
         accuracy_mean=round(report.accuracy_mean, 4),
         accuracy_std=round(report.accuracy_std, 4))
    inputs = {"dataset": dataset_path}
    if endpoint_path:
        inputs["endpoint"] = endpoint_path
    if rules_path:
        inputs["rules"] = rules_path
    if translations_path:
        inputs["translations"] = translations_path
    manifest_mod.write_manifest(
        out, "eval",
        {"setting": setting, "seeds": list(seed_values),
         "accepted_only": accepted_only, "target_language": target_language},
        inputs=inputs, outputs={"report": report_path, "records": records_path})


@cli.command("report")
@click.option("--runs", "run_dirs", required=True, multiple=True,
              type=click.Path(exists=True, file_okay=False),
              help="Evaluation output directories (repeatable).")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
def report_cmd(run_dirs, out_path):
    """Summarize one or more evaluation runs side by side."""
    summary = []
    for run_dir in run_dirs:
        report_file = Path(run_dir) / "report.json"
        if not report_file.is_file():
            raise LexselError(f"{run_dir} has no report.json")
        obj = json.loads(report_file.read_text(encoding="utf-8"))
        summary.append({
            "run": str(run_dir),
            "setting": obj["setting"],
            "model": obj["model"],
            "accuracy_mean": obj["accuracy_mean"],
            "accuracy_std": obj["accuracy_std"],
        })
    summary.sort(key=lambda row: (row["setting"], row["model"], row["run"]))
    text = json.dumps({"runs": summary}, ensure_ascii=False, sort_keys=True, indent=2)
    click.echo(text)
    if out_path:
        Path(out_path).write_text(text + "\n", encoding="utf-8")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.UsageError as e:
        e.show()
        return 2
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.exceptions.Abort:
        return 1
    except LexselError as e:
        emit("error", kind=type(e).__name__, error=str(e))
        return 1


if __name__ == "__main__":
    sys.exit(main())
