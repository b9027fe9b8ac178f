import json
import logging
from pathlib import Path
from typing import List, Optional

import typer
from rich.console import Console
from rich.table import Table

from agents.coordinator_agent import CoordinatorAgent
from mcp.protocol import MCPMessage, new_trace_id
from utils.config import ExperimentConfig, load_config
from utils.errors import QaeError
from utils.ising import IsingInstance
from utils.log import configure_logging

logger = logging.getLogger(__name__)

app = typer.Typer(name="qae", help="Monte Carlo quantum annealing runs and exact convergence checks.", no_args_is_help=True)
console = Console()

# schedule analysed by `qae lab` for each chain
LAB_SCHEDULES = {
    "pimc_boltzmann": {"kind": "theorem3_T1", "params": {"R": "auto", "L1": "auto"}},
    "pimc_tsallis": {"kind": "tsallis_T1", "params": {}},
    "gfmc_g1": {"kind": "gfmc_power", "params": {"N": "auto"}},
    "gfmc_g2": {"kind": "gfmc_g2", "params": {"b": 0.25, "dt": "auto", "N": "auto"}, "offset": "auto"},
}


def _message(type: str, payload: dict) -> MCPMessage:
    return MCPMessage(sender="CLI", receiver=CoordinatorAgent.name, type=type, trace_id=new_trace_id(), payload=payload)


def _fail(exc: Exception) -> None:
    console.print(f"[bold red]error:[/] {exc}")
    raise typer.Exit(code=2)


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _print_schedules(summary: dict) -> None:
    table = Table(title=f"{summary['name']} ({summary['engine']})")
    for column in ("schedule", "runs", "hit_rate", "mean_best_energy", "mean_steps_to_first_hit", "certified"):
        table.add_column(column)
    for row in summary["schedules"]:
        table.add_row(*(_fmt(row.get(column)) for column in ("schedule", "runs", "hit_rate", "mean_best_energy", "mean_steps_to_first_hit", "certified")))
    console.print(table)
    if summary["e_min"] is not None:
        console.print(f"E_min = {summary['e_min']:.6g}")


def _print_reports(reports: List[dict]) -> None:
    table = Table(title="lab")
    for column in ("check", "pass", "worst_slack", "t1_located"):
        table.add_column(column)
    for report in reports:
        verdict = "[green]pass[/]" if report["pass"] else "[red]FAIL[/]"
        table.add_row(report["check"], verdict, _fmt(report["worst_slack"]), _fmt(report["t1_located"]))
    console.print(table)
    for report in reports:
        if not report["pass"]:
            console.print(f"[red]{report['check']}[/] witnesses: {json.dumps(report['witnesses'][:3])}")


@app.callback()
def main(log_level: str = typer.Option("INFO", "--log-level", help="DEBUG, INFO, WARNING or ERROR.")):
    configure_logging(log_level.upper())


@app.command()
def run(
    config: Path = typer.Argument(..., help="Experiment config (JSON)."),
    plots: bool = typer.Option(False, "--plots", help="Also write SVG plots of every trace."),
):
    """Run one experiment config; exits 1 when a lab check is falsified."""
    try:
        experiment = load_config(str(config))
        if plots:
            experiment = experiment.model_copy(update={"output": experiment.output.model_copy(update={"plots": True})})
        response = CoordinatorAgent().handle_message(_message("EXPERIMENT_REQUEST", {"config": experiment}))
    except QaeError as exc:
        _fail(exc)
    summary = response["payload"]["summary"]
    if summary["schedules"]:
        _print_schedules(summary)
    if summary["lab_reports"]:
        _print_reports(summary["lab_reports"])
    if not summary["passed"]:
        raise typer.Exit(code=1)


@app.command()
def lab(
    chain: str = typer.Option("pimc_boltzmann", "--chain", help="pimc_boltzmann, pimc_tsallis, gfmc_g1 or gfmc_g2."),
    check: List[str] = typer.Option(["all"], "--check", help="Check name, repeatable; 'all' runs every applicable check."),
    t_max: int = typer.Option(10 ** 4, "--t-max", help="Largest time step examined."),
    blocks: int = typer.Option(200, "--blocks", help="Blocks for the weak-ergodicity diagnostic."),
    n: int = typer.Option(2, "--n", help="Spins of the generated instance."),
    dist: str = typer.Option("pm_j", "--dist", help="pm_j or gaussian."),
    seed: int = typer.Option(0, "--seed", help="Instance seed."),
    instance: Optional[Path] = typer.Option(None, "--instance", help="Instance JSON file instead of a generated one."),
    trotter_m: int = typer.Option(2, "--trotter-m", help="Trotter slices of the replica chain."),
    beta: float = typer.Option(1.0, "--beta", help="Inverse temperature of the replica chain."),
    q: float = typer.Option(1.5, "--q", help="Tsallis exponent (pimc_tsallis)."),
    out: Optional[Path] = typer.Option(None, "--out", help="Directory for per-check JSON reports."),
):
    """Run exact checks on one chain; exits 1 when any check is falsified."""
    try:
        n_spins = IsingInstance.from_file(str(instance)).n_spins if instance else n
    except (OSError, ValueError) as exc:
        _fail(exc)
    schedule = json.loads(json.dumps(LAB_SCHEDULES.get(chain, LAB_SCHEDULES["pimc_boltzmann"])))
    if chain == "pimc_tsallis":
        # edge of the weak-ergodicity range c <= (q - 1) / R with R = N M
        schedule["params"]["c"] = (q - 1.0) / (n_spins * trotter_m)
    if chain == "gfmc_g1":
        schedule["params"]["c"] = 1.0 / n_spins
    document = {
        "name": f"lab_{chain}",
        "engine": "lab",
        "instance": {"file": str(instance)} if instance else {"generator": {"n": n, "dist": dist, "seed": seed}},
        "pimc": {
            "beta": beta,
            "trotter_M": trotter_m,
            "acceptance": {"kind": "tsallis", "q": q} if chain == "pimc_tsallis" else {"kind": "heat_bath"},
        },
        "lab": {"chain": chain, "checks": check, "t_max": t_max, "blocks": blocks},
        "schedule": schedule,
    }
    try:
        experiment = ExperimentConfig.model_validate(document)
        loaded = experiment.instance.load()
        payload = {
            "spec": experiment.chain_spec(loaded),
            "checks": check,
            "t_max": t_max,
            "blocks": blocks,
            "out_dir": str(out) if out else None,
        }
        response = CoordinatorAgent().handle_message(_message("LAB_REQUEST", payload))
    except ValueError as exc:
        # QaeError, or pydantic rejecting the assembled options
        _fail(exc)
    _print_reports(response["payload"]["reports"])
    if not response["payload"]["passed"]:
        raise typer.Exit(code=1)


@app.command()
def compare(configs: List[Path] = typer.Argument(..., help="Two or more configs sharing instance and seeds.")):
    """Compare annealing schedules on the same instance and seeds."""
    try:
        experiments = [load_config(str(path)) for path in configs]
        response = CoordinatorAgent().handle_message(_message("COMPARE_REQUEST", {"configs": experiments}))
    except QaeError as exc:
        _fail(exc)
    rows = response["payload"]["rows"]
    table = Table(title="schedule comparison")
    columns = list(rows[0].keys()) if rows else []
    for column in columns:
        table.add_column(column)
    for row in rows:
        table.add_row(*(_fmt(row[column]) for column in columns))
    console.print(table)


@app.command("gen-instance")
def gen_instance(
    n: int = typer.Option(..., "--n", help="Number of spins."),
    dist: str = typer.Option("pm_j", "--dist", help="pm_j or gaussian."),
    seed: int = typer.Option(0, "--seed", help="Generator seed."),
    sigma: float = typer.Option(1.0, "--sigma", help="Standard deviation for gaussian couplings."),
    topology: str = typer.Option("complete", "--topology", help="complete or ring."),
    out: Optional[Path] = typer.Option(None, "--out", help="Write the instance here instead of stdout."),
):
    """Generate a random spin-glass instance as JSON."""
    payload = {"n": n, "dist": dist, "seed": seed, "sigma": sigma, "topology": topology}
    try:
        response = CoordinatorAgent().handle_message(_message("INSTANCE_REQUEST", payload))
    except QaeError as exc:
        _fail(exc)
    text = json.dumps(response["payload"]["instance"], indent=2)
    if out:
        out.write_text(text + "\n", encoding="utf-8")
        logger.info("instance written to %s", out)
    else:
        typer.echo(text)


if __name__ == "__main__":
    app()
