"""Command-line interface.

Commands: analyze, synth, evaluate, store, retrieve, render.
Exit codes: 0 success, 1 internal error, 2 usage or input error.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import click

from .config import Config, load_config
from .errors import MurmurscopeError
from .evaluate import evaluate_corpus, write_cases_csv, write_corpus
from .explain import CaseStore, counterfactual
from .metrics import write_confusion_csv, write_eval_csv
from .pipeline import analyze as analyze_instance
from .pipeline import report_from_json, report_to_json
from .render import DiagramStyle, render_abductive, render_contrastive, render_counterfactual
from .segmentation import load_mask
from .shapes import Diagnosis
from .signal import read_wav, window
from .synth import generate_corpus


@click.group()
@click.option("--config", "config_path", envvar="MURMURSCOPE_CONFIG", type=click.Path(), default=None,
              help="JSON config file (or set MURMURSCOPE_CONFIG).")
@click.option("--set", "overrides", multiple=True, metavar="SECTION.KEY=VALUE",
              help="Override a single config key; repeatable.")
@click.option("--out-dir", type=click.Path(), default=".", help="Output directory.")
@click.option("--workers", type=int, default=1, help="Parallel workers for corpus evaluation.")
@click.option("--seed", type=int, default=0, help="Seed for synthetic generation.")
@click.pass_context
def cli(ctx, config_path, overrides, out_dir, workers, seed):
    """Murmur-shape analysis of phonocardiogram recordings."""
    ctx.ensure_object(dict)
    ctx.obj["config"] = load_config(config_path, list(overrides))
    ctx.obj["out_dir"] = Path(out_dir)
    ctx.obj["workers"] = workers
    ctx.obj["seed"] = seed


def _parse_explain_flag(value: str):
    kinds = []
    for item in value.split(","):
        item = item.strip()
        if not item:
            continue
        if item == "contrastive":
            kinds.append(("contrastive", None))
        elif item.startswith("counterfactual:"):
            target = item.split(":", 1)[1].upper()
            try:
                kinds.append(("counterfactual", Diagnosis(target)))
            except ValueError:
                raise click.UsageError(f"unknown counterfactual target {target!r}")
        else:
            raise click.UsageError(
                f"unknown explanation kind {item!r} (use contrastive, counterfactual:<DIAG>)"
            )
    return kinds


@cli.command()
@click.argument("wav_path", type=click.Path())
@click.option("--window-s", type=float, default=1.0, show_default=True, help="Instance length.")
@click.option("--stride-s", type=float, default=0.1, show_default=True, help="Window stride.")
@click.option("--explain", "explain_flag", default="", help="Extra explanations, e.g. 'contrastive,counterfactual:MS'.")
@click.option("--mask", "mask_path", type=click.Path(), default=None,
              help="Bypass segmentation with a mask file (single-window input).")
@click.option("--store", "store_path", type=click.Path(), default=None,
              help="Append each window's result to this case store.")
@click.pass_context
def analyze(ctx, wav_path, window_s, stride_s, explain_flag, mask_path, store_path):
    """Analyze a recording; writes one report JSON + diagram SVG per window."""
    cfg: Config = ctx.obj["config"]
    out_dir: Path = ctx.obj["out_dir"]
    out_dir.mkdir(parents=True, exist_ok=True)
    explains = _parse_explain_flag(explain_flag)

    w = read_wav(wav_path)
    instances = window(w, window_s, stride_s)
    if not instances:
        click.echo(f"recording shorter than one {window_s:.2f}s window; nothing to analyze")
        return
    stem = Path(wav_path).stem
    style = DiagramStyle.from_config(cfg.render)
    store = CaseStore(store_path) if store_path else None

    for k, inst in enumerate(instances):
        mask_override = None
        if mask_path is not None:
            n_grid = int(math.floor(len(inst.samples) / inst.sample_rate_hz * cfg.signal.grid_hz))
            mask_override = load_mask(mask_path, grid_hz=cfg.signal.grid_hz, expected_len=n_grid)
        report = analyze_instance(
            inst, cfg,
            instance_id=f"{stem}_w{k}",
            source_path=str(wav_path),
            offset_s=k * stride_s,
            mask_override=mask_override,
        )
        (out_dir / f"{stem}_w{k}.json").write_text(json.dumps(report_to_json(report), indent=1))
        (out_dir / f"{stem}_w{k}.svg").write_text(render_abductive(report, style))
        for kind, target in explains:
            if kind == "contrastive":
                (out_dir / f"{stem}_w{k}_contrastive.svg").write_text(
                    render_contrastive(report, style))
            else:
                if target is report.resolved:
                    click.echo(f"{stem}_w{k}: skipping counterfactual toward the resolved diagnosis")
                    continue
                expl = counterfactual(report, target)
                (out_dir / f"{stem}_w{k}_counterfactual_{target.value}.svg").write_text(
                    render_counterfactual(expl, style))
        if store is not None:
            record = store.append(report)
            click.echo(f"{stem}_w{k}: stored as {record.id}")
        click.echo(f"{stem}_w{k}: resolved {report.resolved.value}"
                   + (f" ({'; '.join(report.warnings)})" if report.warnings else ""))


@cli.command()
@click.option("--per-class", type=int, default=50, show_default=True, help="Cases per diagnosis.")
@click.option("--snr", type=str, default="inf", show_default=True, help="SNR in dB, or 'inf'.")
@click.pass_context
def synth(ctx, per_class, snr):
    """Generate a synthetic labeled corpus (WAV + ground truth + manifest)."""
    cfg: Config = ctx.obj["config"]
    out_dir: Path = ctx.obj["out_dir"]
    snr_db = math.inf if snr.lower() in ("inf", "none") else float(snr)
    cases, manifest = generate_corpus(per_class, snr_db=snr_db, seed=ctx.obj["seed"], sig_cfg=cfg.signal)
    manifest_path = write_corpus(cases, manifest, out_dir)
    click.echo(f"wrote {len(cases)} cases to {out_dir} (manifest: {manifest_path})")


@cli.command()
@click.argument("corpus_dir", type=click.Path())
@click.option("--render/--no-render", "do_render", default=True, show_default=True,
              help="Also write one diagram SVG per case.")
@click.pass_context
def evaluate(ctx, corpus_dir, do_render):
    """Run the pipeline over a corpus and write metrics/confusion/cases CSVs."""
    cfg: Config = ctx.obj["config"]
    out_dir: Path = ctx.obj["out_dir"]
    out_dir.mkdir(parents=True, exist_ok=True)
    result, outcomes, reports = evaluate_corpus(
        corpus_dir, cfg, workers=ctx.obj["workers"], keep_reports=do_render
    )
    write_eval_csv(result, out_dir / "metrics.csv", label=Path(corpus_dir).name)
    write_confusion_csv(result, out_dir / "confusion.csv")
    write_cases_csv(outcomes, out_dir / "cases.csv")
    if do_render:
        svg_dir = out_dir / "svg"
        svg_dir.mkdir(exist_ok=True)
        style = DiagramStyle.from_config(cfg.render)
        for outcome, report in zip(outcomes, reports):
            (svg_dir / f"{outcome.case_id}.svg").write_text(render_abductive(report, style))
    click.echo(
        f"accuracy={result.accuracy:.4f} mean_dice={result.mean_dice:.4f} "
        f"n={result.n_cases} missed_segments={result.n_missed_segments}"
    )


@cli.command()
@click.argument("report_json", type=click.Path())
@click.option("--store", "store_path", type=click.Path(), required=True, help="Case store file (JSON lines).")
@click.pass_context
def store(ctx, report_json, store_path):
    """Append an analyzed report to the case store."""
    report = report_from_json(json.loads(Path(report_json).read_text()))
    record = CaseStore(store_path).append(report)
    click.echo(f"stored {record.id} ({record.resolved.value}, d={record.lack_of_fit:.3g})")


@cli.command()
@click.argument("diagnosis", type=click.Choice([y.value for y in Diagnosis]))
@click.option("-k", type=int, default=3, show_default=True, help="How many cases to retrieve.")
@click.option("--store", "store_path", type=click.Path(), required=True, help="Case store file (JSON lines).")
@click.pass_context
def retrieve(ctx, diagnosis, k, store_path):
    """Print the k best-fitting stored cases with the given diagnosis."""
    records = CaseStore(store_path).retrieve(Diagnosis(diagnosis), k)
    for rec in records:
        click.echo(json.dumps(rec.to_json()))
    if not records:
        click.echo(f"no stored cases with diagnosis {diagnosis}", err=True)


@cli.command()
@click.argument("report_json", type=click.Path())
@click.option("--kind", type=click.Choice(["abductive", "contrastive", "counterfactual"]),
              default="abductive", show_default=True)
@click.option("--target", type=click.Choice([y.value for y in Diagnosis]), default=None,
              help="Counterfactual target diagnosis.")
@click.option("-o", "out_path", type=click.Path(), default=None, help="Output SVG path.")
@click.pass_context
def render(ctx, report_json, kind, target, out_path):
    """Render a diagram SVG from a saved report JSON."""
    cfg: Config = ctx.obj["config"]
    style = DiagramStyle.from_config(cfg.render)
    report = report_from_json(json.loads(Path(report_json).read_text()))
    if kind == "abductive":
        doc = render_abductive(report, style)
    elif kind == "contrastive":
        doc = render_contrastive(report, style)
    else:
        if target is None:
            raise click.UsageError("--target is required for counterfactual rendering")
        doc = render_counterfactual(counterfactual(report, Diagnosis(target)), style)
    out = Path(out_path) if out_path else Path(report_json).with_suffix(f".{kind}.svg")
    out.write_text(doc)
    click.echo(f"wrote {out}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False, obj={})
        return 0
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.UsageError as exc:
        exc.show()
        return 2
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except FileNotFoundError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except MurmurscopeError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except Exception as exc:  # pragma: no cover - internal failure path
        click.echo(f"internal error: {exc!r}", err=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
