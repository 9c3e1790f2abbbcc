"""Command-line interface.

Subcommands: simulate, tpdm, fit, risk, bootstrap, preprocess-wind, replay.
Every run writes its outputs plus a manifest.json into --out; replaying a
manifest reproduces the run byte for byte.  Exit codes: 0 success, 2 input /
parameter problems, 3 estimation failures.

Units and schemas: observation CSVs hold one row per observation (optional
header, decimal points, no thousands separators); wind speeds are in m/s;
probabilities and capacity weights are unitless.
"""
from __future__ import annotations

import sys

import click

from .errors import EstimationError, TailFactorsError
from .pipeline import replay as replay_manifest
from .pipeline import run_pipeline


def _floats(_ctx, _param, value):
    if value is None:
        return None
    return [float(v) for v in str(value).split(",") if v.strip() != ""]


def _execute(command: str, params: dict, out: str) -> None:
    try:
        manifest = run_pipeline(command, params, out)
    except EstimationError as exc:
        click.echo(f"estimation error: {exc}", err=True)
        sys.exit(3)
    except TailFactorsError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    click.echo(f"wrote {manifest}")


@click.group()
@click.version_option(package_name="tailfactors")
def main():
    """Latent linear factor models for multivariate tail dependence."""


_data_opt = click.option("--data", required=True, type=click.Path(exists=True),
                         help="Observations CSV (rows = observations).")
_out_opt = click.option("--out", required=True, type=click.Path(),
                        help="Output directory for reports and the manifest.")
_lower_tail_opt = click.option("--lower-tail", is_flag=True, default=False,
                               help="Analyze the lower tail via the entrywise reciprocal.")
_norm_opt = click.option("--norm", default="max", show_default=True,
                         type=click.Choice(["max", "one", "two"]),
                         help="Norm for radii in the empirical TPDM.")


def _fit_options(fn):
    for opt in reversed([
        click.option("--k", type=int, default=None,
                     help="TPDM threshold count [default: 5% of n]."),
        click.option("--k-prime", type=int, default=None,
                     help="Spectral threshold count [default: k]."),
        click.option("--margin-k", type=int, default=None,
                     help="Per-margin excess count [default: k]."),
        _norm_opt,
        click.option("--kappa-grid", callback=_floats, default=None,
                     help="Comma-separated kappa grid [default: 0.002..0.008 step 0.0005]."),
        click.option("--lambda-grid", callback=_floats, default=None,
                     help="Comma-separated lambda grid [default: 0.00001..0.001 step 0.00001]."),
    ]):
        fn = opt(fn)
    return fn


@main.command()
@click.option("--model", required=True, type=click.Path(exists=True),
              help="Plain-text model configuration file.")
@click.option("--n", required=True, type=int, help="Number of rows to simulate.")
@click.option("--seed", type=int, default=None, help="Seed (overrides the config seed).")
@_out_opt
def simulate(model, n, seed, out):
    """Simulate a sample from a factor model; writes sample.csv and ground truth."""
    _execute("simulate", {"model": model, "n": n, "seed": seed}, out)


@main.command()
@_data_opt
@_lower_tail_opt
@click.option("--k", type=int, default=None, help="Threshold count [default: 5% of n].")
@_norm_opt
@_out_opt
def tpdm(data, lower_tail, k, norm, out):
    """Estimate the empirical tail pairwise dependence matrix."""
    _execute("tpdm", {"data": data, "lower_tail": lower_tail, "k": k, "norm": norm}, out)


@main.command()
@_data_opt
@_lower_tail_opt
@_fit_options
@click.option("--no-figures", "figures", is_flag=True, default=True,
              help="Skip PNG figure rendering.")
@_out_opt
def fit(data, lower_tail, k, k_prime, margin_k, norm, kappa_grid, lambda_grid, figures, out):
    """Select hyperparameters and fit the full tail model; writes fit artifacts."""
    _execute("fit", {
        "data": data, "lower_tail": lower_tail, "k": k, "k_prime": k_prime,
        "margin_k": margin_k, "norm": norm, "kappa_grid": kappa_grid,
        "lambda_grid": lambda_grid, "figures": figures,
    }, out)


@main.command()
@_data_opt
@_lower_tail_opt
@click.option("--fit-dir", type=click.Path(exists=True), default=None,
              help="Reuse fit artifacts instead of refitting.")
@_fit_options
@click.option("--weights", type=click.Path(exists=True), default=None,
              help="Capacity weights CSV [default: uniform 1/d].")
@click.option("--threshold", type=float, default=None,
              help="Scalar threshold applied to every coordinate.")
@click.option("--thresholds-csv", type=click.Path(exists=True), default=None,
              help="Per-coordinate threshold vector CSV.")
@click.option("--alpha", type=float, default=None,
              help="Capacity level for a threshold sweep.")
@click.option("--alpha-grid", callback=_floats, default=None,
              help="Comma-separated capacity levels to sweep.")
@click.option("--w-grid", callback=_floats, default=None,
              help="Comma-separated scalar thresholds to sweep.")
@click.option("--bootstrap", type=int, default=0, show_default=True,
              help="Bootstrap replicates for confidence bands (0 = off).")
@click.option("--beta", type=float, default=0.05, show_default=True,
              help="1 - confidence level.")
@click.option("--seed", type=int, default=0, show_default=True, help="Bootstrap seed.")
@click.option("--no-figures", "figures", is_flag=True, default=True,
              help="Skip PNG figure rendering.")
@_out_opt
def risk(data, lower_tail, fit_dir, k, k_prime, margin_k, norm, kappa_grid,
         lambda_grid, weights, threshold, thresholds_csv, alpha, alpha_grid,
         w_grid, bootstrap, beta, seed, figures, out):
    """Estimate joint tail-risk curves over an alpha or threshold sweep."""
    _execute("risk", {
        "data": data, "lower_tail": lower_tail, "fit_dir": fit_dir, "k": k,
        "k_prime": k_prime, "margin_k": margin_k, "norm": norm,
        "kappa_grid": kappa_grid, "lambda_grid": lambda_grid,
        "weights": weights, "threshold": threshold,
        "thresholds_csv": thresholds_csv, "alpha": alpha,
        "alpha_grid": alpha_grid, "w_grid": w_grid, "bootstrap": bootstrap,
        "beta": beta, "seed": seed, "figures": figures,
    }, out)


@main.command()
@_data_opt
@_lower_tail_opt
@click.option("--estimator", type=click.Choice(["empirical", "model"]),
              default="empirical", show_default=True)
@_fit_options
@click.option("--weights", type=click.Path(exists=True), default=None)
@click.option("--threshold", type=float, default=None)
@click.option("--thresholds-csv", type=click.Path(exists=True), default=None)
@click.option("--alpha", type=float, required=True, help="Capacity level.")
@click.option("--b", type=int, default=999, show_default=True, help="Replicates.")
@click.option("--beta", type=float, default=0.05, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@_out_opt
def bootstrap(data, lower_tail, estimator, k, k_prime, margin_k, norm,
              kappa_grid, lambda_grid, weights, threshold, thresholds_csv,
              alpha, b, beta, seed, out):
    """Basic bootstrap confidence interval for one joint tail probability."""
    _execute("bootstrap", {
        "data": data, "lower_tail": lower_tail, "estimator": estimator,
        "k": k, "k_prime": k_prime, "margin_k": margin_k, "norm": norm,
        "kappa_grid": kappa_grid, "lambda_grid": lambda_grid,
        "weights": weights, "threshold": threshold,
        "thresholds_csv": thresholds_csv, "alpha": alpha, "b": b,
        "beta": beta, "seed": seed,
    }, out)


@main.command("preprocess-wind")
@click.option("--speeds", required=True, type=click.Path(exists=True),
              help="CSV with columns hour, month, then reference-height speeds (m/s).")
@click.option("--speeds-high", type=click.Path(exists=True), default=None,
              help="Paired CSV of speeds at --high-height for exponent estimation.")
@click.option("--high-height", type=float, default=100.0, show_default=True,
              help="Height (m) of the paired measurements.")
@click.option("--exponent", type=float, default=None,
              help="Fixed Hellmann exponent (skips estimation).")
@click.option("--target-height", type=float, default=100.0, show_default=True)
@click.option("--reference-height", type=float, default=10.0, show_default=True)
@click.option("--no-grouping", "grouped", is_flag=True, default=True,
              help="Use one global exponent instead of hour-of-day x month means.")
@_out_opt
def preprocess_wind(speeds, speeds_high, high_height, exponent, target_height,
                    reference_height, grouped, out):
    """Extrapolate reference-height wind speeds to hub height by the power law."""
    _execute("preprocess-wind", {
        "speeds": speeds, "speeds_high": speeds_high, "high_height": high_height,
        "exponent": exponent, "target_height": target_height,
        "reference_height": reference_height, "grouped": grouped,
    }, out)


@main.command()
@click.argument("manifest", type=click.Path(exists=True))
@_out_opt
def replay(manifest, out):
    """Re-run a recorded pipeline; outputs are byte-identical to the original."""
    try:
        path = replay_manifest(manifest, out)
    except EstimationError as exc:
        click.echo(f"estimation error: {exc}", err=True)
        sys.exit(3)
    except TailFactorsError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
