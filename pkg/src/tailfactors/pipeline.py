"""End-to-end pipeline orchestration behind the CLI.

Every subcommand is a function taking a ReportWriter plus JSON-serializable
parameters.  ``run_pipeline`` dispatches, writes the run manifest (command,
version, parameters, output names), and removes partial outputs if any stage
fails.  A manifest can be replayed to reproduce a run byte for byte.
"""
from __future__ import annotations

import csv
import hashlib
import json
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (ConfigurationError, EstimationError, InputError,
                     ParameterError, TailFactorsError)
from .families import SubsetFamily
from .io import (broadcast_thresholds, ingest_csv, load_model_config,
                 read_matrix_csv, write_json, write_matrix_csv)
from .loading import LoadingEstimate, LspConfig
from .marginal import GpdFit
from .model import simulate, tpdm_oracle, validate_model
from .norms import Norm
from .purevar import PureVarResult
from .report import ReportWriter, write_fit_report, write_risk_report, write_table
from .risk import (FittedTailModel, HyperConfig, bootstrap_ci, empirical_p,
                   estimate_p, lower_tail_transform, reciprocal,
                   select_hyperparameters)
from .spectral import SpectralSample, aggregate, empirical_psi
from .tpdm import DataMatrix, empirical_chi, empirical_tpdm, pseudo_pareto
from .wind import apply_extrapolation, estimate_exponent_table


@contextmanager
def stage(name: str):
    """Tag errors with the pipeline stage they came from."""
    try:
        yield
    except TailFactorsError as exc:
        raise type(exc)(f"[{name}] {exc}") from exc


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _load_data(params) -> DataMatrix:
    with stage("ingest"):
        data = ingest_csv(params["data"], "observations")
    if params.get("lower_tail"):
        with stage("lower-tail-transform"):
            data = lower_tail_transform(data)
    return data


def _default_k(n: int, k) -> int:
    return int(k) if k is not None else max(10, int(0.05 * n))


# ---------------------------------------------------------------------------
# Subcommand implementations
# ---------------------------------------------------------------------------

def cmd_simulate(writer: ReportWriter, params: dict) -> None:
    with stage("model-config"):
        model, cfg_seed = load_model_config(params["model"])
    seed = params.get("seed")
    seed = int(seed) if seed is not None else (cfg_seed if cfg_seed is not None else 0)
    with stage("validate"):
        report = validate_model(model, mc_draws=params.get("mc_draws", 20_000), seed=seed)
        if not report.ok:
            raise InputError("invalid model: " + "; ".join(report.violations))
    with stage("simulate"):
        sample = simulate(model, int(params["n"]), seed)
    write_matrix_csv(writer.path("sample.csv"), sample.data)
    truth = {"n": sample.n, "d": model.d, "K": model.n_factors, "seed": seed,
             "max_norm_condition": report.max_norm_condition}
    if model.spectral.is_atomic:
        sigma, latent = tpdm_oracle(model, Norm.max())
        write_matrix_csv(writer.path("oracle_tpdm.csv"), sigma.matrix)
        write_matrix_csv(writer.path("oracle_latent.csv"), latent)
    write_json(writer.path("truth.json"), truth)
    writer.path("model.cfg").write_text(Path(params["model"]).read_text())


def cmd_tpdm(writer: ReportWriter, params: dict) -> None:
    data = _load_data(params)
    k = _default_k(data.n, params.get("k"))
    norm = Norm.parse(params.get("norm", "max"))
    with stage("pseudo-pareto"):
        pseudo = pseudo_pareto(data)
    with stage("empirical-tpdm"):
        sigma = empirical_tpdm(pseudo, k, norm)
    write_matrix_csv(writer.path("tpdm.csv"), sigma.matrix)
    write_json(writer.path("tpdm.json"), {
        "k": sigma.k, "effective_count": sigma.effective_count,
        "norm": norm.label(), "n": data.n, "d": data.d,
    })


def _fit(data: DataMatrix, params: dict) -> FittedTailModel:
    k = _default_k(data.n, params.get("k"))
    k_prime = int(params["k_prime"]) if params.get("k_prime") is not None else k
    margin_k = int(params["margin_k"]) if params.get("margin_k") is not None else k
    with stage("hyperparameter-selection"):
        return select_hyperparameters(
            data, k=k, k_prime=k_prime,
            kappa_grid=params.get("kappa_grid"),
            lambda_grid=params.get("lambda_grid"),
            norm=Norm.parse(params.get("norm", "max")),
            margin_k=margin_k,
        )


def cmd_fit(writer: ReportWriter, params: dict) -> None:
    data = _load_data(params)
    fitted = _fit(data, params)
    chi_emp = empirical_chi(data, fitted.k_prime)
    sigma = empirical_tpdm(pseudo_pareto(data), fitted.k, fitted.norm)
    with stage("report"):
        write_fit_report(writer, fitted, chi_emp, sigma.matrix,
                         figures=params.get("figures", True))


def load_fitted(fit_dir, data: DataMatrix) -> FittedTailModel:
    """Rebuild a FittedTailModel from the artifacts written by the fit stage."""
    fit_dir = Path(fit_dir)
    meta = json.loads((fit_dir / "loading.json").read_text())
    matrix = read_matrix_csv(fit_dir / "loading.csv")
    purevar = PureVarResult.from_json((fit_dir / "purevar.json").read_text())
    cfg = HyperConfig(kappa=float(meta["config"]["kappa"]),
                      lam=float(meta["config"]["lambda"]),
                      projection=bool(meta["config"]["projection"]))
    loading = LoadingEstimate(
        matrix=matrix,
        support_sizes=np.asarray(meta["support_sizes"], dtype=int),
        config=LspConfig(lam=cfg.lam, use_projection=cfg.projection),
        row_flags={int(j): tuple(f) for j, f in meta.get("row_flags", {}).items()},
    )
    psi_rows = read_matrix_csv(fit_dir / "psi.csv")
    raw_w = psi_rows[:, -1]
    total = float(raw_w.sum())
    psi = SpectralSample(atoms=psi_rows[:, :-1], weights=raw_w / total,
                         k_prime=int(meta["k_prime"]), total_mass=total)
    margins = []
    with open(fit_dir / "margins.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            margins.append(GpdFit(
                xi=float(row["xi"]), sigma=float(row["sigma"]),
                threshold=float(row["u"]), k=int(row["k"]), n=data.n,
                converged=row["converged"] == "true",
            ))
    agg = aggregate(pseudo_pareto(data), purevar)
    return FittedTailModel(
        n_factors=int(meta["K_hat"]), loading=loading, psi=psi,
        margins=tuple(margins), config=cfg, r2=float(meta["r2"]),
        adequate=bool(meta["adequate"]), purevar=purevar, aggregated=agg,
        data=data, k=int(meta["k"]), k_prime=int(meta["k_prime"]),
        norm=Norm.parse(meta["norm"]),
    )


def _capacity_weights(params, d: int) -> np.ndarray:
    if params.get("weights"):
        with stage("capacity-weights"):
            w = ingest_csv(params["weights"], "capacity_weights")
        if w.size != d:
            raise InputError(f"capacity weights have length {w.size}, expected {d}")
        return w
    return np.full(d, 1.0 / d)


def _thresholds(params, d: int) -> np.ndarray:
    if params.get("thresholds_csv"):
        with stage("thresholds"):
            vec = ingest_csv(params["thresholds_csv"], "thresholds")
        return broadcast_thresholds(vec, d)
    if params.get("threshold") is not None:
        return np.full(d, float(params["threshold"]))
    raise ConfigurationError("provide --threshold or --thresholds-csv")


def bootstrap_curve(data: DataMatrix, evaluate, b: int, beta: float, seed: int):
    """Basic bootstrap bands for a whole curve with shared resamples.

    ``evaluate`` maps a DataMatrix to the vector of curve values; each
    replicate is evaluated once across all grid points.  Returns (lower,
    upper, failures).
    """
    point = np.asarray(evaluate(data), dtype=float)
    reps = []
    failures = 0
    for rep in range(b):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), rep]))
        idx = rng.integers(0, data.n, size=data.n)
        try:
            reps.append(np.asarray(evaluate(DataMatrix(data.values[idx])), dtype=float))
        except TailFactorsError:
            failures += 1
    if len(reps) < 0.9 * b:
        raise EstimationError(f"bootstrap failed in {failures} of {b} replicates")
    reps = np.sort(np.asarray(reps), axis=0)
    b_eff = reps.shape[0]

    def quant(q):
        i = min(max(int(np.ceil(q * b_eff)) - 1, 0), b_eff - 1)
        return reps[i]

    lower = np.clip(2.0 * point - quant(1.0 - beta / 2.0), 0.0, 1.0)
    upper = np.clip(2.0 * point - quant(beta / 2.0), lower, 1.0)
    return lower, upper, failures


def cmd_risk(writer: ReportWriter, params: dict) -> None:
    lower_tail = bool(params.get("lower_tail"))
    refit_params = params
    if params.get("fit_dir"):
        fit_manifest = Path(params["fit_dir"]) / "manifest.json"
        if fit_manifest.exists():
            fit_params = json.loads(fit_manifest.read_text()).get("parameters", {})
            lower_tail = bool(fit_params.get("lower_tail", lower_tail))
            refit_params = fit_params  # bootstrap refits mirror the original fit
    raw = ingest_csv(params["data"], "observations")
    data = lower_tail_transform(raw) if lower_tail else raw
    if params.get("fit_dir"):
        with stage("load-fit"):
            fitted = load_fitted(params["fit_dir"], data)
    else:
        fitted = _fit(data, params)
    weights = _capacity_weights(params, data.d)

    alpha_grid = params.get("alpha_grid")
    w_grid = params.get("w_grid")
    if (alpha_grid is None) == (w_grid is None):
        raise ConfigurationError("provide exactly one of --alpha-grid / --w-grid")

    def to_x(thresholds: np.ndarray) -> np.ndarray:
        return reciprocal(thresholds) if lower_tail else thresholds

    if alpha_grid is not None:
        sweep = "alpha"
        grid = [float(a) for a in alpha_grid]
        x = to_x(_thresholds(params, data.d))
        targets = [(a, x, SubsetFamily.capacity(weights, a)) for a in grid]
    else:
        sweep = "threshold"
        if params.get("alpha") is None:
            raise ConfigurationError("--w-grid requires --alpha")
        alpha = float(params["alpha"])
        fam = SubsetFamily.capacity(weights, alpha)
        grid = [float(w) for w in w_grid]
        targets = [(w, to_x(np.full(data.d, w)), fam) for w in grid]

    with stage("risk-estimation"):
        rows = []
        for value, x, fam in targets:
            rows.append({
                "value": value,
                "p_model": estimate_p(fitted, x, fam).value,
                "p_empirical": empirical_p(data, x, fam),
            })

    b = int(params.get("bootstrap") or 0)
    if b > 0:
        beta = float(params.get("beta", 0.05))
        seed = int(params.get("seed", 0))
        with stage("bootstrap"):
            emp_lo, emp_hi, _ = bootstrap_curve(
                data, lambda dm: [empirical_p(dm, x, fam) for _, x, fam in targets],
                b, beta, seed)

            def model_curve(dm):
                refit = _fit(dm, refit_params)
                return [estimate_p(refit, x, fam).value for _, x, fam in targets]

            mod_lo, mod_hi, _ = bootstrap_curve(data, model_curve, b, beta, seed)
        for i, row in enumerate(rows):
            row.update({"emp_lower": emp_lo[i], "emp_upper": emp_hi[i],
                        "model_lower": mod_lo[i], "model_upper": mod_hi[i]})
    with stage("report"):
        write_risk_report(writer, rows, sweep, figures=params.get("figures", True))


def cmd_bootstrap(writer: ReportWriter, params: dict) -> None:
    data = _load_data(params)
    weights = _capacity_weights(params, data.d)
    if params.get("alpha") is None:
        raise ConfigurationError("--alpha is required")
    fam = SubsetFamily.capacity(weights, float(params["alpha"]))
    x = _thresholds(params, data.d)
    if params.get("lower_tail"):
        x = reciprocal(x)
    estimator = params.get("estimator", "empirical")
    fit_kwargs = {}
    if estimator == "model":
        k = _default_k(data.n, params.get("k"))
        fit_kwargs = {
            "k": k,
            "k_prime": int(params["k_prime"]) if params.get("k_prime") is not None else k,
            "margin_k": int(params["margin_k"]) if params.get("margin_k") is not None else k,
            "kappa_grid": params.get("kappa_grid"),
            "lambda_grid": params.get("lambda_grid"),
            "norm": Norm.parse(params.get("norm", "max")),
        }
    with stage("bootstrap"):
        ci = bootstrap_ci(data, estimator, b=int(params.get("b", 999)),
                          beta=float(params.get("beta", 0.05)),
                          seed=int(params.get("seed", 0)),
                          x=x, family=fam, fit_kwargs=fit_kwargs or None)
    write_json(writer.path("bootstrap.json"), {
        "estimator": estimator, "point": ci.point, "lower": ci.lower,
        "upper": ci.upper, "level": ci.level, "replicates": ci.replicates,
        "failures": ci.failures,
    })


def cmd_preprocess_wind(writer: ReportWriter, params: dict) -> None:
    with stage("ingest"):
        table = read_matrix_csv(params["speeds"])
    if table.shape[1] < 3:
        raise InputError("wind CSV needs hour, month, and at least one speed column")
    hours, months, speeds = table[:, 0].astype(int), table[:, 1].astype(int), table[:, 2:]
    target = float(params.get("target_height", 100.0))
    reference = float(params.get("reference_height", 10.0))
    if params.get("exponent") is not None:
        with stage("extrapolate"):
            lifted = apply_extrapolation(speeds, hours, months,
                                         float(params["exponent"]), target, reference)
    else:
        if not params.get("speeds_high"):
            raise ConfigurationError("provide --exponent or --speeds-high")
        with stage("exponent-estimation"):
            high = read_matrix_csv(params["speeds_high"])
            if high.shape != table.shape:
                raise InputError("paired-height wind CSVs must have identical shapes")
            tab = estimate_exponent_table(
                speeds, high[:, 2:], float(params["high_height"]),
                hours, months, grouped=bool(params.get("grouped", True)),
                reference_height=reference)
        with stage("extrapolate"):
            lifted = apply_extrapolation(speeds, hours, months, tab, target, reference)
        write_table(writer.path("exponents.csv"),
                    ["month", "hour"] + [f"col{j}" for j in range(speeds.shape[1])],
                    [(m, h, *tab.groups[(m, h)]) for (m, h) in sorted(tab.groups)])
    write_matrix_csv(writer.path("extrapolated.csv"),
                     np.column_stack([hours, months, lifted]))


COMMANDS = {
    "simulate": cmd_simulate,
    "tpdm": cmd_tpdm,
    "fit": cmd_fit,
    "risk": cmd_risk,
    "bootstrap": cmd_bootstrap,
    "preprocess-wind": cmd_preprocess_wind,
}


def run_pipeline(command: str, params: dict, out_dir) -> Path:
    """Run one pipeline command, writing reports and a replayable manifest.

    On any stage failure the partially written outputs are removed and the
    (stage-tagged) error propagates.  Returns the manifest path.
    """
    if command not in COMMANDS:
        raise ParameterError(f"unknown command {command!r}")
    writer = ReportWriter(out_dir)
    try:
        COMMANDS[command](writer, params)
        inputs = {}
        for key in ("data", "model", "weights", "thresholds_csv", "speeds", "speeds_high"):
            if params.get(key):
                inputs[key] = {"path": str(params[key]), "sha256": _sha256(params[key])}
        manifest_path = writer.path("manifest.json")
        write_json(manifest_path, {
            "command": command,
            "version": __version__,
            "parameters": params,
            "inputs": inputs,
            "outputs": writer.relative_names(),
        })
    except Exception:
        writer.cleanup()
        raise
    return manifest_path


def replay(manifest_path, out_dir) -> Path:
    """Re-run a pipeline exactly as recorded in its manifest."""
    manifest = json.loads(Path(manifest_path).read_text())
    return run_pipeline(manifest["command"], manifest["parameters"], out_dir)
