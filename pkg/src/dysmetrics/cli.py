"""Command-line pipeline: extract measurements, run statistics, classify."""

import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import fixtures as fixtures_mod
from . import ml, pronunciation, stats
from .corpus import builtin_profile, load_profile, parse_manifest, read_wav
from .errors import DysmetricsError
from .features import (
    FEATURE_DIMENSIONS,
    FEATURE_NAMES,
    collect_speaker_corner_means,
    extract_features,
)
from .signal import intensity_contour, pitch_track

log = logging.getLogger("dysmetrics")

CSV_ID_COLUMNS = ("utt_id", "speaker_id", "severity")


def _load_profile_arg(profile_arg):
    if profile_arg in ("english", "korean", "tamil"):
        return builtin_profile(profile_arg)
    return load_profile(profile_arg)


@click.group()
def main():
    """Acoustic intelligibility measurements for dysarthric speech."""
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")


def _extract_one(args):
    record, profile, speaker_means, base_dir = args
    try:
        return extract_features(record, profile, speaker_means, base_dir), None
    except (DysmetricsError, OSError, ValueError) as exc:
        return None, f"{record.utterance_id}: {exc}"


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--profile", "profile_arg", default="english", show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--jobs", default=1, show_default=True)
@click.option("--dump-alignments", is_flag=True)
@click.option("--dump-contours", is_flag=True)
def extract(manifest, profile_arg, out_dir, jobs, dump_alignments, dump_contours):
    """Compute the 39 measurements for every utterance in the manifest."""
    profile = _load_profile_arg(profile_arg)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    base_dir = Path(manifest).parent
    records = parse_manifest(manifest, profile)
    speaker_means = collect_speaker_corner_means(records, profile, base_dir)
    tasks = [(r, profile, speaker_means, base_dir) for r in records]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_extract_one, tasks))
    else:
        results = [_extract_one(t) for t in tasks]
    rows = []
    failures = []
    for (row, error), record in zip(results, records):
        if error is not None:
            failures.append(error)
            log.warning("skipped %s", error)
        else:
            rows.append(row)
    out_csv = out_dir / "features.csv"
    with open(out_csv, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_ID_COLUMNS + FEATURE_NAMES)
        for row in rows:
            writer.writerow(
                [row.utterance_id, row.speaker_id, row.severity]
                + [_cell(row.values[n]) for n in FEATURE_NAMES]
            )
    click.echo(f"wrote {out_csv} ({len(rows)} rows, {len(failures)} failures)")
    if dump_alignments:
        _dump_alignments(records, out_dir)
    if dump_contours:
        _dump_contours(records, profile, base_dir, out_dir)
    if not records:
        log.warning("empty manifest")
    elif len(failures) > len(records) / 2:
        raise SystemExit(f"{len(failures)}/{len(records)} utterances failed")


def _cell(value):
    return "" if not np.isfinite(value) else repr(float(value))


def _dump_alignments(records, out_dir):
    lines = []
    for record in records:
        if record.decoded_phonemes is None:
            continue
        alignment = pronunciation.align_phoneme_sequences(
            record.canonical_phonemes, record.decoded_phonemes
        )
        lines.append(f"# {record.utterance_id} (cost {alignment.cost})")
        lines.append(pronunciation.format_alignment(alignment))
        lines.append("")
    (out_dir / "alignments.txt").write_text("\n".join(lines), encoding="utf-8")


def _dump_contours(records, profile, base_dir, out_dir):
    contour_dir = out_dir / "contours"
    contour_dir.mkdir(exist_ok=True)
    for record in records:
        try:
            clip = read_wav(_resolve(record.audio_path, base_dir))
            pitch = pitch_track(clip)
            energy = intensity_contour(clip)
        except (DysmetricsError, OSError):
            continue
        with open(contour_dir / f"{record.utterance_id}_f0.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "f0"])
            for t, f in zip(pitch.times, pitch.f0):
                w.writerow([f"{t:.3f}", "" if np.isnan(f) else f"{f:.2f}"])
        with open(contour_dir / f"{record.utterance_id}_db.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "db"])
            for t, level in zip(energy.times, energy.levels_db):
                w.writerow([f"{t:.3f}", f"{level:.2f}"])


def _resolve(path, base_dir):
    p = Path(path)
    return p if p.is_absolute() else base_dir / p


def read_feature_csv(path):
    """Read a features CSV back into (rows, X, utt, spk, sev)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        feature_cols = header[len(CSV_ID_COLUMNS):]
        rows = []
        for line in reader:
            values = {
                name: (float(cell) if cell != "" else float("nan"))
                for name, cell in zip(feature_cols, line[len(CSV_ID_COLUMNS):])
            }
            rows.append((line[0], line[1], line[2], values))
    X = np.array([[r[3][n] for n in feature_cols] for r in rows]) if rows else np.empty((0, len(feature_cols)))
    utt = [r[0] for r in rows]
    spk = [r[1] for r in rows]
    sev = [r[2] for r in rows]
    return feature_cols, X, utt, spk, sev


@main.command(name="stats")
@click.option("--features", "features_csv", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def stats_cmd(features_csv, out_dir):
    """Group-means table and Kruskal-Wallis significance per measurement."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    feature_cols, X, utt, spk, sev = read_feature_csv(features_csv)
    if not sev:
        raise SystemExit("empty features CSV")
    rows = [(s, v, dict(zip(feature_cols, x))) for s, v, x in zip(spk, sev, X)]
    means = stats.group_means(rows, feature_cols)
    columns = ("healthy", "dys", "mild", "moderate", "severe")
    with open(out_dir / "group_means.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("measurement",) + columns)
        for name in feature_cols:
            writer.writerow(
                [name] + ["" if means[name][c] is None else f"{means[name][c]:.4f}" for c in columns]
            )
    present = [s for s in ("healthy", "mild", "moderate", "severe") if s in set(sev)]
    sig = []
    if len(present) >= 2:
        results = stats.feature_significance(rows, feature_cols)
        for name in feature_cols:
            res = results[name]
            if res is None:
                continue
            sig.append(
                {
                    "measurement": name,
                    "H": res.h,
                    "df": res.df,
                    "p": res.p,
                    "significant": bool(res.significant),
                }
            )
    else:
        log.warning("fewer than 2 severity groups; Kruskal-Wallis skipped")
    (out_dir / "significance.json").write_text(
        json.dumps(sig, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    click.echo(f"wrote {out_dir / 'group_means.csv'} and {out_dir / 'significance.json'}")


@main.command()
@click.option("--features", "features_csv", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", default=ml.DEFAULT_SEED, show_default=True)
@click.option("--trees", default=ml.DEFAULT_TREES, show_default=True)
@click.option("--grid", "grid_spec", default=None, help="log-decade grid as 'min:max', e.g. '1e-4:1e4'")
@click.option("--no-select", is_flag=True, help="skip the selected-features run")
@click.option("--selection-outside-cv", is_flag=True)
def classify(features_csv, out_dir, seed, trees, grid_spec, no_select, selection_outside_cv):
    """Severity classification under leave-one-speaker-out cross-validation."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    feature_cols, X, utt, spk, sev = read_feature_csv(features_csv)
    grid = _parse_grid(grid_spec)
    if no_select:
        run = ml.grid_search_losocv(X, np.array(sev), spk, utt, feature_cols, grid=grid, seed=seed, n_trees=trees)
        doc = {"accuracy_all": run.accuracy, "runs": {"all": run.to_dict()}}
    else:
        report = ml.run_classification(
            X, np.array(sev), spk, utt, feature_cols,
            grid=grid, seed=seed, n_trees=trees,
            selection_outside_cv=selection_outside_cv,
        )
        doc = report.to_dict()
    (out_dir / "cv_report.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _importance_outputs(X, sev, feature_cols, seed, trees, out_dir)
    click.echo(f"wrote {out_dir / 'cv_report.json'}")


def _parse_grid(grid_spec):
    if grid_spec is None:
        return ml.DEFAULT_GRID
    lo, hi = (float(x) for x in grid_spec.split(":"))
    k_lo, k_hi = int(round(np.log10(lo))), int(round(np.log10(hi)))
    return tuple(10.0 ** k for k in range(k_lo, k_hi + 1))


def _importance_outputs(X, sev, feature_cols, seed, trees, out_dir):
    """Per-feature importance CSV and the by-dimension bar chart."""
    X_imp = ml.impute_column_means(np.asarray(X, dtype=float))
    scaler = ml.fit_scaler(X_imp)
    forest = ml.fit_extra_trees(ml.apply_scaler(scaler, X_imp), np.array(sev), n_trees=trees, seed=seed)
    dims = [FEATURE_DIMENSIONS.get(name, "other") for name in feature_cols]
    with open(out_dir / "importances.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("feature", "dimension", "importance"))
        for name, dim, imp in zip(feature_cols, dims, forest.importances):
            writer.writerow((name, dim, repr(float(imp))))
    totals = {}
    for dim, imp in zip(dims, forest.importances):
        totals[dim] = totals.get(dim, 0.0) + float(imp)
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    order = ["voice quality", "pronunciation", "prosody"]
    labels = [d for d in order if d in totals] + [d for d in totals if d not in order]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.bar(labels, [totals[d] for d in labels], color=["#777", "#c44", "#47a"][: len(labels)])
    ax.set_ylabel("aggregated importance")
    ax.set_title("Feature importance by speech dimension")
    fig.tight_layout()
    fig.savefig(out_dir / "importance_by_dimension.svg", metadata={"Date": None})
    plt.close(fig)


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--profile", "profile_arg", default="english", show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", default=ml.DEFAULT_SEED, show_default=True)
@click.option("--jobs", default=1, show_default=True)
@click.pass_context
def report(ctx, manifest, profile_arg, out_dir, seed, jobs):
    """Run extract, stats, and classify in sequence."""
    ctx.invoke(extract, manifest=manifest, profile_arg=profile_arg, out_dir=out_dir, jobs=jobs,
               dump_alignments=False, dump_contours=False)
    features_csv = str(Path(out_dir) / "features.csv")
    ctx.invoke(stats_cmd, features_csv=features_csv, out_dir=out_dir)
    ctx.invoke(classify, features_csv=features_csv, out_dir=out_dir, seed=seed,
               trees=ml.DEFAULT_TREES, grid_spec=None, no_select=False,
               selection_outside_cv=False)


@main.group()
def fixtures():
    """Synthetic fixture corpus tools."""


@fixtures.command()
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--speakers", default=12, show_default=True)
@click.option("--utts-per-speaker", default=4, show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--profile", "profile_arg", default="english", show_default=True)
def generate(out_dir, speakers, utts_per_speaker, seed, profile_arg):
    """Generate a complete synthetic corpus with manifest, WAVs, and tiers."""
    profile = _load_profile_arg(profile_arg)
    manifest = fixtures_mod.generate_corpus(out_dir, speakers, utts_per_speaker, seed, profile)
    click.echo(f"wrote {manifest}")


if __name__ == "__main__":
    sys.exit(main())
