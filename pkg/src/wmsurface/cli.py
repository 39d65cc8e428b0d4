"""Command-line entry points: serve the HTTP API, run policy simulations,
refit archived sessions, and compute the named statistics on CSV columns."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import click

from .domain import FeasibilityConstraints, SessionRecord
from .gp import GPConfig, GridSpec, predict_grid


@click.group()
def main():
    """Adaptive working-memory surface estimation toolkit."""


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--store-dir", type=click.Path(), default=None, help="Session archive directory.")
def serve(host, port, store_dir):
    """Run the HTTP session service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(store_dir=store_dir), host=host, port=port)


@main.command()
@click.option("--cohort", default=20, show_default=True, help="Number of virtual participants.")
@click.option("--budget", default=30, show_default=True, help="Trials per run (incl. primers).")
@click.option(
    "--policies",
    default="active,halton,independent_staircase",
    show_default=True,
    help="Comma-separated policy names.",
)
@click.option("--seed", default=0, show_default=True)
@click.option("--out-dir", type=click.Path(), default="sim_results", show_default=True)
@click.option("--bands/--no-bands", default=False, help="Track 0.3/0.7 posterior band curves.")
def simulate(cohort, budget, policies, seed, out_dir, bands):
    """Run sampling-policy simulations and export RMSE tables."""
    from . import simulate as sim

    policy_list = [sim.Policy(p.strip()) for p in policies.split(",") if p.strip()]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    participants = sim.synthetic_cohort(cohort, seed=seed)
    runs = []
    for i, vp in enumerate(participants):
        for pol in policy_list:
            fresh = sim.make_virtual_participant(vp.truth_curve(), seed=vp.seed)
            run = sim.run_policy(fresh, pol, budget, track_bands=bands)
            runs.append(run)
            sim.write_run_json(run, out / f"run_{i:03d}_{pol.value}.json")
            click.echo(f"participant {i} {pol.value}: final RMSE {run.rmse_by_step[budget]:.3f}")
    sim.write_runs_csv(runs, out / "runs.csv")
    sim.write_aggregate_csv(runs, out / "aggregate.csv")
    click.echo(f"wrote {len(runs)} runs to {out}")


@main.command("fit")
@click.argument("record_path", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None, help="Write curve JSON here.")
def fit_cmd(record_path, out):
    """Standardize an archived session and print its threshold curve."""
    from .isocontour import extract_isocontour, standardize_posterior

    record = SessionRecord.from_json(Path(record_path).read_text())
    state = standardize_posterior(
        [o for o in record.outcomes if not o.phantom], record.constraints
    )
    curve = extract_isocontour(predict_grid(state, GridSpec()))
    payload = json.dumps(curve.to_dict(), indent=2)
    if out:
        Path(out).write_text(payload)
    click.echo(payload)


@main.command()
@click.argument("record_path", type=click.Path(exists=True))
@click.option("--levels", default="0.3,0.7", show_default=True)
@click.option("--out", type=click.Path(), default=None)
def bands(record_path, levels, out):
    """Posterior band curves (default 0.3/0.7) for an archived session."""
    from .isocontour import band_curves, standardize_posterior

    lo, hi = (float(x) for x in levels.split(","))
    record = SessionRecord.from_json(Path(record_path).read_text())
    state = standardize_posterior(
        [o for o in record.outcomes if not o.phantom], record.constraints
    )
    grid = predict_grid(state, GridSpec())
    c_lo, c_hi = band_curves(grid, (lo, hi))
    payload = json.dumps({"band_lo": c_lo.to_dict(), "band_hi": c_hi.to_dict()}, indent=2)
    if out:
        Path(out).write_text(payload)
    click.echo(payload)


def _read_columns(path, columns):
    names = [c.strip() for c in columns.split(",")]
    cols = {n: [] for n in names}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            for n in names:
                cols[n].append(float(row[n]))
    return [cols[n] for n in names]


@main.command()
@click.argument("test", type=click.Choice(["icc", "pearson", "ttest", "outliers"]))
@click.argument("csv_path", type=click.Path(exists=True))
@click.option("--columns", required=True, help="Comma-separated CSV column names.")
def stats(test, csv_path, columns):
    """Run a named statistic on CSV columns and print JSON."""
    from . import stats as st

    if test == "icc":
        a, b = _read_columns(csv_path, columns)
        result = st.icc_2_1(list(zip(a, b))).to_dict()
    elif test == "pearson":
        a, b = _read_columns(csv_path, columns)
        result = st.pearson_with_bf(a, b).to_dict()
    elif test == "ttest":
        cols = _read_columns(csv_path, columns)
        if len(cols) == 2:
            diffs = [x - y for x, y in zip(cols[0], cols[1])]
        else:
            diffs = cols[0]
        result = st.paired_t(diffs).to_dict()
    else:
        (vals,) = _read_columns(csv_path, columns)
        result = {"outlier_indices": sorted(st.iqr_fence_outliers(vals))}
    click.echo(json.dumps(result, indent=2))


if __name__ == "__main__":
    main()
