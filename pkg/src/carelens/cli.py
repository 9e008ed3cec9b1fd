"""Command-line entry points for the training, explanation and service flows."""

from __future__ import annotations

import json
import logging
import os
import sys

import click

from .api import load_cohort_dir, serve
from .chat import ExplanationService
from .cohort import ModelRegistry, train_cohort
from .config import load_config
from .sensors import frames_from_records, label_windows, matrix_from_frames, read_sensor_csv
from .stats import compare_report
from .synthetic import generate_synthetic_cohort


@click.group()
@click.option("--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool):
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO)


@main.command()
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--participants", default=6, show_default=True)
@click.option("--windows", default=150, show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--missing-rate", default=0.0, show_default=True)
def synth(out_dir, participants, windows, seed, missing_rate):
    """Generate a synthetic cohort of per-participant feature matrices."""
    os.makedirs(out_dir, exist_ok=True)
    cohort = generate_synthetic_cohort(
        participants, windows, seed, missing_rate=missing_rate
    )
    for pid, matrix in cohort.items():
        with open(os.path.join(out_dir, f"{pid}.json"), "w", encoding="utf-8") as fh:
            fh.write(matrix.to_json())
    click.echo(f"wrote {len(cohort)} matrices to {out_dir}")


@main.command()
@click.option("--records", "records_path", required=True, type=click.Path(exists=True))
@click.option("--events", "events_path", type=click.Path(exists=True), default=None,
              help="CSV of participant,start,end,intoxicated self-reports.")
@click.option("--out", "out_dir", required=True, type=click.Path())
def features(records_path, events_path, out_dir):
    """Extract per-participant feature matrices from a raw sensor CSV."""
    records = read_sensor_csv(records_path)
    frames = frames_from_records(records)
    if events_path:
        events = []
        with open(events_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("participant"):
                    continue
                pid, start, end, flag = line.split(",")
                events.append((pid, float(start), float(end), flag.lower() in ("1", "true")))
        frames = label_windows(frames, events)
    os.makedirs(out_dir, exist_ok=True)
    by_pid: dict[str, list] = {}
    for f in frames:
        by_pid.setdefault(f.participant_id, []).append(f)
    for pid, group in sorted(by_pid.items()):
        matrix = matrix_from_frames(group)
        with open(os.path.join(out_dir, f"{pid}.json"), "w", encoding="utf-8") as fh:
            fh.write(matrix.to_json())
    click.echo(f"wrote {len(by_pid)} matrices to {out_dir}")


@main.command()
@click.option("--cohort", "cohort_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True)
def train(cohort_dir, out_path, seed):
    """Train per-participant models and write the registry JSON."""
    cohort = load_cohort_dir(cohort_dir)
    registry = train_cohort(cohort, seed=seed)
    registry.save(out_path)
    click.echo(
        f"trained {len(registry.entries)} participants "
        f"(skipped {len(registry.skipped)}), mean held-out accuracy "
        f"{registry.mean_accuracy():.3f} -> {out_path}"
    )


@main.command()
@click.option("--registry", "registry_path", required=True, type=click.Path(exists=True))
@click.option("--cohort", "cohort_dir", required=True, type=click.Path(exists=True))
@click.option("--participant", required=True)
@click.option("--kind", type=click.Choice(["shap", "rules", "cf", "causal"]), required=True)
@click.option("--instance", type=int, default=None)
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Write the JSON artifact here instead of stdout.")
def explain(registry_path, cohort_dir, participant, kind, instance, out_path):
    """Produce one explanation artifact (chart spec + img64) for a participant."""
    registry = ModelRegistry.load(registry_path)
    cohort = load_cohort_dir(cohort_dir)
    service = ExplanationService(registry, cohort)
    kind_, artifact, spec, img64 = service.explain(participant, kind, instance)
    artifact_dict = (
        [r.to_dict() for r in artifact] if isinstance(artifact, list) else artifact.to_dict()
    )
    payload = json.dumps(
        {"kind": kind_, "artifact": artifact_dict, "chart_spec": spec.to_dict(), "img64": img64},
        indent=1,
    )
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(payload)
        click.echo(f"wrote {kind_} artifact to {out_path}")
    else:
        click.echo(payload)


@main.command("eval-compare")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def eval_compare(in_path, out_path):
    """Paired t-test report for an optimized-vs-basic survey CSV."""
    with open(in_path, encoding="utf-8") as fh:
        report = compare_report(fh.read())
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=1)
    n = len(report["questions"])
    click.echo(f"compared {n} questions -> {out_path}")
    for w in report["warnings"]:
        click.echo(f"warning: {w}", err=True)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def serve_cmd(config_path):
    """Run the HTTP service."""
    serve(load_config(config_path))


# click group entries named after their CLI surface
main.add_command(serve_cmd, name="serve")

if __name__ == "__main__":
    sys.exit(main())
