"""Command-line entry points.

Thin wrappers over the library: every command loads files, calls one
operation and prints or writes its result.  Domain errors surface as
clean one-line failures with exit code 1.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import click

from logitlab import dataset as ds
from logitlab import metrics as metrics_mod
from logitlab import report as report_mod
from logitlab import runner as runner_mod
from logitlab import validate as validate_mod
from logitlab.engine import bfgs, kernel
from logitlab.llmgate import client as llm_client
from logitlab.llmgate import extract as llm_extract
from logitlab.llmgate.config import ProviderConfig, experiment
from logitlab.llmgate.prompts import AttachmentTooLarge, MissingDataset, build_prompt
from logitlab.specdsl import analysis, binding, parser, serialize

_DOMAIN_ERRORS = (
    ds.DatasetError,
    parser.SpecDslError,
    kernel.NonFiniteUtility,
    metrics_mod.MissingCoefficient,
    llm_client.AuthError,
    llm_client.RateLimited,
    llm_client.FixtureMissing,
    llm_client.TransportError,
    MissingDataset,
    AttachmentTooLarge,
    runner_mod.RunError,
    ValueError,
)


def _fail(exc: Exception) -> None:
    raise click.ClickException(f"{type(exc).__name__}: {exc}")


def _load_dataset(csv_path: str, dict_path: str) -> ds.Dataset:
    return ds.load_dataset(csv_path, dict_path)


def _read_spec(path: str) -> parser.UtilitySpec:
    return parser.parse_spec(Path(path).read_text(encoding="utf-8"))


@click.group()
def main() -> None:
    """Specify, estimate, validate and compare multinomial logit models."""


# -- dataset ---------------------------------------------------------------


@main.group("dataset")
def dataset_group() -> None:
    """Load, check and describe choice datasets."""


@dataset_group.command("validate")
@click.argument("csv_path", type=click.Path(exists=True))
@click.argument("dict_path", type=click.Path(exists=True))
def dataset_validate(csv_path: str, dict_path: str) -> None:
    """Check a CSV against its data dictionary."""
    try:
        data = _load_dataset(csv_path, dict_path)
    except _DOMAIN_ERRORS as exc:
        _fail(exc)
    click.echo(f"ok: {data.n_obs} observations, {len(data.alternatives)} alternatives")


@dataset_group.command("describe")
@click.argument("csv_path", type=click.Path(exists=True))
@click.argument("dict_path", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None, help="Write markdown here instead of stdout.")
def dataset_describe(csv_path: str, dict_path: str, out: str | None) -> None:
    """Emit the deterministic markdown description."""
    try:
        data = _load_dataset(csv_path, dict_path)
    except _DOMAIN_ERRORS as exc:
        _fail(exc)
    text = ds.describe(data)
    if out:
        Path(out).write_text(text, encoding="utf-8")
        click.echo(f"wrote {out}")
    else:
        click.echo(text, nl=False)


# -- spec -------------------------------------------------------------------


@main.group("spec")
def spec_group() -> None:
    """Parse and check utility specifications."""


@spec_group.command("check")
@click.argument("spec_path", type=click.Path(exists=True))
@click.option("--data", "csv_path", required=True, type=click.Path(exists=True))
@click.option("--dict", "dict_path", required=True, type=click.Path(exists=True))
def spec_check(spec_path: str, csv_path: str, dict_path: str) -> None:
    """Parse a .dcm file and bind it against a dataset."""
    try:
        spec = _read_spec(spec_path)
        data = _load_dataset(csv_path, dict_path)
        stats = analysis.analyze_structure(spec, data.dictionary)
        binding.bind(spec, data)
    except _DOMAIN_ERRORS as exc:
        _fail(exc)
    click.echo(f"ok: spec '{spec.name}' binds to {data.n_obs} observations")
    click.echo(
        f"params: {stats.n_params} free, vars: {stats.n_vars}, asc: {str(stats.has_asc).lower()}, "
        f"generic: {stats.n_generic}, alt-specific: {stats.n_altspecific}, "
        f"interactions: {stats.n_interactions}, transformations: {stats.n_transformations}"
    )


# -- estimate / metrics / validate -------------------------------------------


@main.command("estimate")
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True))
@click.option("--data", "csv_path", required=True, type=click.Path(exists=True))
@click.option("--dict", "dict_path", required=True, type=click.Path(exists=True))
@click.option("--max-iters", default=500, show_default=True)
@click.option("--grad-tol", default=1e-6, show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None, help="Write results JSON here.")
def estimate_cmd(
    spec_path: str, csv_path: str, dict_path: str, max_iters: int, grad_tol: float, out_path: str | None
) -> None:
    """Estimate one specification by maximum likelihood."""
    try:
        spec = _read_spec(spec_path)
        data = _load_dataset(csv_path, dict_path)
        model = binding.bind(spec, data)
        result = bfgs.estimate(model, max_iters=max_iters, grad_tol=grad_tol)
    except _DOMAIN_ERRORS as exc:
        _fail(exc)

    fit = metrics_mod.information_criteria(result.loglik, result.n_free, model.n_obs)
    click.echo(f"spec '{spec.name}': converged={str(result.converged).lower()} "
               f"({result.convergence_reason}), iterations={result.iterations}")
    click.echo(f"LL={result.loglik:.4f}  AIC={fit.aic:.4f}  BIC={fit.bic:.4f}  k={result.n_free}")
    for i, name in enumerate(result.names):
        click.echo(
            f"  {name:24s} {result.estimates[i]: .6f}  "
            f"se {result.std_errors[i]: .6f}  t {result.t_ratios[i]: .3f}"
        )
    if out_path:
        doc = {
            "spec_name": spec.name,
            "spec_text": serialize.serialize_spec(spec),
            "n_obs": model.n_obs,
            "estimation": result.as_dict(),
            "fit": {
                "loglik": _clean(fit.loglik),
                "k": fit.k,
                "n": fit.n,
                "aic": _clean(fit.aic),
                "bic": _clean(fit.bic),
            },
        }
        Path(out_path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        click.echo(f"wrote {out_path}")


def _clean(x: float) -> float | None:
    return x if math.isfinite(x) else None


def _load_results_doc(path: str) -> tuple[dict, bfgs.EstimationResult]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return doc, runner_mod.estimation_from_dict(doc["estimation"])


@main.command("metrics")
@click.option("--results", "results_path", required=True, type=click.Path(exists=True))
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True))
@click.option("--dict", "dict_path", required=True, type=click.Path(exists=True))
def metrics_cmd(results_path: str, spec_path: str, dict_path: str) -> None:
    """Fit statistics and value of time from a results file."""
    try:
        doc, result = _load_results_doc(results_path)
        spec = _read_spec(spec_path)
        dictionary = ds.parse_dictionary(Path(dict_path).read_text(encoding="utf-8"))
        fit = metrics_mod.information_criteria(result.loglik, result.n_free, doc["n_obs"])
        rho = metrics_mod.rho_squared(result.loglik, result.null_loglik)
    except _DOMAIN_ERRORS as exc:
        _fail(exc)
    click.echo(f"LL={fit.loglik:.4f}  AIC={fit.aic:.4f}  BIC={fit.bic:.4f}  k={fit.k}  n={fit.n}")
    click.echo(f"rho-squared={rho:.4f}")
    try:
        vot = metrics_mod.value_of_time(result, spec, dictionary)
    except metrics_mod.MissingCoefficient as exc:
        click.echo(f"value of time: n/a ({exc})")
        return
    click.echo(
        f"value of time={vot.value:.4f} reliable={str(vot.reliable).lower()} ({vot.notes})"
    )


@main.command("validate")
@click.option("--results", "results_path", required=True, type=click.Path(exists=True))
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True))
@click.option("--dict", "dict_path", required=True, type=click.Path(exists=True))
def validate_cmd(results_path: str, spec_path: str, dict_path: str) -> None:
    """Apply the inclusion rules to a results file."""
    try:
        _, result = _load_results_doc(results_path)
        spec = _read_spec(spec_path)
        dictionary = ds.parse_dictionary(Path(dict_path).read_text(encoding="utf-8"))
        report = validate_mod.check_model(result, spec, dictionary)
    except _DOMAIN_ERRORS as exc:
        _fail(exc)
    click.echo(f"exclusion: {report.exclusion}")
    click.echo(f"has_asc={str(report.has_asc).lower()} converged={str(report.converged).lower()}")
    for v in report.sign_violations:
        click.echo(f"  positive sign: {v['parameter']} = {v['estimate']:.6f}")
    for name in report.insignificant_core:
        click.echo(f"  insignificant: {name}")
    if report.notes:
        click.echo(f"notes: {report.notes}")


# -- llm gateway --------------------------------------------------------------


def _parse_providers(text: str, replay_dir: str | None) -> list[ProviderConfig]:
    providers: list[ProviderConfig] = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if ":" in item:
            name, model = item.split(":", 1)
            providers.append(ProviderConfig(name=name, model=model))
        elif replay_dir:
            root = Path(replay_dir) / item
            models = sorted(p.name for p in root.iterdir() if p.is_dir()) if root.is_dir() else []
            if not models:
                raise llm_client.FixtureMissing(f"no fixtures under {root}")
            providers.extend(ProviderConfig(name=item, model=m) for m in models)
        else:
            raise ValueError(f"provider '{item}' needs a model (use provider:model) in live mode")
    return providers


@main.command("suggest")
@click.option("--experiment", "exp_id", required=True, type=click.IntRange(1, 5))
@click.option("--provider", required=True)
@click.option("--model", required=True)
@click.option("--replay", "replay_dir", type=click.Path(exists=True), default=None)
@click.option("--paper-faithful", is_flag=True, default=False,
              help="Send the verbatim template without the machine-format addendum.")
@click.option("--data", "csv_path", type=click.Path(exists=True), default=None)
@click.option("--dict", "dict_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_dir", type=click.Path(), default=None, help="Write extracted .dcm files here.")
@click.option("--transcripts", "transcript_dir", type=click.Path(), default=None,
              help="Persist live transcripts into this directory.")
def suggest_cmd(
    exp_id: int,
    provider: str,
    model: str,
    replay_dir: str | None,
    paper_faithful: bool,
    csv_path: str | None,
    dict_path: str | None,
    out_dir: str | None,
    transcript_dir: str | None,
) -> None:
    """Ask one model for specifications (live or replayed)."""
    config = experiment(exp_id)
    try:
        data = _load_dataset(csv_path, dict_path) if csv_path and dict_path else None
        bundle = build_prompt(config, data, paper_faithful=paper_faithful)
        transcript = llm_client.complete(
            bundle,
            ProviderConfig(name=provider, model=model),
            mode="replay" if replay_dir else "live",
            replay_dir=replay_dir,
            transcript_dir=transcript_dir,
        )
        extraction = llm_extract.extract_specs(transcript)
    except _DOMAIN_ERRORS as exc:
        _fail(exc)

    for spec in extraction.specs:
        click.echo(f"spec: {spec.name}")
        if out_dir:
            path = Path(out_dir)
            path.mkdir(parents=True, exist_ok=True)
            (path / f"{spec.name}.dcm").write_text(
                serialize.serialize_spec(spec), encoding="utf-8"
            )
    for claim in extraction.claimed:
        click.echo(f"claim: {claim.spec_name} LL={claim.loglik}")
    for diag in extraction.diagnostics:
        click.echo(f"diagnostic: {diag}", err=True)
    if out_dir and extraction.specs:
        click.echo(f"wrote {len(extraction.specs)} spec file(s) to {out_dir}")


@main.command("run")
@click.option("--experiment", "exp_id", required=True, type=click.IntRange(1, 5))
@click.option("--providers", required=True,
              help="Comma-separated provider:model pairs (model optional in replay mode).")
@click.option("--data", "csv_path", required=True, type=click.Path(exists=True))
@click.option("--dict", "dict_path", required=True, type=click.Path(exists=True))
@click.option("--replay", "replay_dir", type=click.Path(exists=True), default=None)
@click.option("--out", "out_dir", type=click.Path(), default="runs")
@click.option("--paper-faithful", is_flag=True, default=False)
def run_cmd(
    exp_id: int,
    providers: str,
    csv_path: str,
    dict_path: str,
    replay_dir: str | None,
    out_dir: str,
    paper_faithful: bool,
) -> None:
    """Run one experiment end-to-end and persist the results."""
    try:
        provider_list = _parse_providers(providers, replay_dir)
        data = _load_dataset(csv_path, dict_path)
        result = runner_mod.run_experiment(
            experiment(exp_id),
            provider_list,
            data,
            mode="replay" if replay_dir else "live",
            replay_dir=replay_dir,
            out_dir=out_dir,
            paper_faithful=paper_faithful,
        )
    except _DOMAIN_ERRORS as exc:
        _fail(exc)
    included = sum(1 for r in result.records if r.validation and r.validation.included)
    click.echo(
        f"experiment {exp_id}: {len(result.records)} spec(s), {included} included; "
        f"results under {out_dir}/exp{exp_id}/"
    )
    for diag in result.diagnostics:
        click.echo(f"diagnostic: {diag}", err=True)


# -- report -------------------------------------------------------------------


@main.group("report")
def report_group() -> None:
    """Render tables and exports from persisted runs."""


def _load_runs(runs_dir: str) -> list[runner_mod.ExperimentResult]:
    results = runner_mod.load_results(runs_dir)
    if not results:
        raise click.ClickException(f"no persisted experiments under {runs_dir}")
    return results


@report_group.command("summary")
@click.option("--runs", "runs_dir", required=True, type=click.Path(exists=True))
@click.option("--experiment", "exp_id", type=click.IntRange(1, 5), default=None,
              help="Limit to one experiment.")
def report_summary(runs_dir: str, exp_id: int | None) -> None:
    """Per-experiment comparison tables."""
    for result in _load_runs(runs_dir):
        if exp_id is not None and result.config.id != exp_id:
            continue
        click.echo(report_mod.summary_table(result))


@report_group.command("best-of")
@click.option("--runs", "runs_dir", required=True, type=click.Path(exists=True))
@click.option("--metric", type=click.Choice(["ll", "aic", "bic"]), default="ll", show_default=True)
def report_best_of(runs_dir: str, metric: str) -> None:
    """Best value per model and experiment."""
    click.echo(report_mod.best_of(_load_runs(runs_dir), metric))


@report_group.command("profile")
@click.option("--runs", "runs_dir", required=True, type=click.Path(exists=True))
def report_profile(runs_dir: str) -> None:
    """Structural profile per model."""
    click.echo(report_mod.profile_table(report_mod.llm_profile(_load_runs(runs_dir))))


@report_group.command("export")
@click.option("--runs", "runs_dir", required=True, type=click.Path(exists=True))
@click.option("--metric", type=click.Choice(["ll", "aic", "bic", "vot"]), default="ll",
              show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
def report_export(runs_dir: str, metric: str, out_path: str | None) -> None:
    """Long-format CSV of converged specs for plotting."""
    text = report_mod.distribution_export(_load_runs(runs_dir), metric)
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
        click.echo(f"wrote {out_path}")
    else:
        click.echo(text, nl=False)


if __name__ == "__main__":
    main(sys.argv[1:])
