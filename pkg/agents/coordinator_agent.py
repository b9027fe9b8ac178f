import logging
import os
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from agents.gfmc_agent import GfmcAgent
from agents.lab_agent import LabAgent
from agents.pimc_agent import PimcAgent
from mcp.protocol import MCPMessage, new_trace_id, reply
from utils.artifacts import SCHEMA_VERSION, ResultRecord, write_json
from utils.config import ExperimentConfig
from utils.errors import InvalidArgumentError
from utils.ising import IsingInstance, ground_states_bruteforce, random_instance
from utils.pimc import AcceptanceKind, replica_l1
from utils.schedules import Control, time_to_threshold

logger = logging.getLogger(__name__)

# transverse-field level quoted by the t1/t2 estimates of a comparison
COMPARE_DELTA = 0.01

COMPARISON_COLUMNS = [
    "config",
    "engine",
    "schedule",
    "certified",
    "runs",
    "hit_rate",
    "mean_steps_to_first_hit",
    "mean_best_energy",
    "t1_estimate",
    "t2_estimate",
]


def _dispatch(message: MCPMessage) -> MCPMessage:
    # runs inside a joblib worker; agents hold no state, so each call builds its own
    if message["type"] == "ANNEAL_REQUEST":
        return PimcAgent().anneal(message)
    return GfmcAgent().run(message)


class CoordinatorAgent:
    """
    Routes requests to the engine agents and runs whole experiments:
    one engine run per seed fanned out to a worker pool, records merged by
    (schedule, seed), a versioned summary written next to the traces.
    """

    name = "CoordinatorAgent"

    def __init__(self):
        """
        Initializes the engine agents used for in-process requests.
        """
        self.pimc = PimcAgent()
        self.gfmc = GfmcAgent()
        self.lab = LabAgent()

    def handle_message(self, message: MCPMessage) -> Optional[MCPMessage]:
        """
        Main dispatcher for incoming messages.

        Args:
            message (MCPMessage): The message to handle, including type and payload.

        Returns:
            Optional[MCPMessage]: The response message, or None for an unknown type.
        """
        message_type = message.get("type")

        if message_type == "INSTANCE_REQUEST":
            task = message["payload"]
            instance = random_instance(
                task["n"],
                task.get("dist", "pm_j"),
                task.get("seed", 0),
                task.get("sigma", 1.0),
                task.get("topology", "complete"),
            )
            return reply(message, self.name, "INSTANCE", {"instance": instance.to_json_dict()})

        elif message_type == "ANNEAL_REQUEST":
            return self.pimc.anneal(message)

        elif message_type == "GFMC_REQUEST":
            return self.gfmc.run(message)

        elif message_type == "LAB_REQUEST":
            return self.lab.run_checks(message)

        elif message_type == "EXPERIMENT_REQUEST":
            summary = self.run_experiment(message["payload"]["config"], message["trace_id"])
            return reply(message, self.name, "EXPERIMENT_SUMMARY", {"summary": summary})

        elif message_type == "COMPARE_REQUEST":
            table = self.compare_schedules(message["payload"]["configs"], message["trace_id"])
            return reply(message, self.name, "COMPARISON", {"rows": table.to_dict(orient="records")})

        else:
            logger.warning("Unknown message type: %s", message_type)
            return None

    def run_experiment(self, config: ExperimentConfig, trace_id: Optional[str] = None) -> dict:
        """
        Executes the configured engine for every seed and writes the summary.

        Args:
            config (ExperimentConfig): Validated experiment.
            trace_id (str): Trace id shared by the per-seed requests.

        Returns:
            dict: The summary document (validated against summary.schema.json),
            also written to <output.dir>/<name>/summary.json.
        """
        trace_id = trace_id or new_trace_id()
        instance = config.instance.load()
        e_min = self._ground_energy(instance, config)
        run_dir = os.path.join(config.output.dir, config.name)

        records: List[ResultRecord] = []
        lab_reports: List[dict] = []
        certified = False
        if config.engine == "lab":
            request = MCPMessage(
                sender=self.name,
                receiver=LabAgent.name,
                type="LAB_REQUEST",
                trace_id=trace_id,
                payload={
                    "spec": config.chain_spec(instance),
                    "checks": config.lab.checks,
                    "t_max": config.lab.t_max,
                    "blocks": config.lab.blocks,
                    "out_dir": run_dir,
                },
            )
            lab_reports = self.lab.run_checks(request)["payload"]["reports"]
        else:
            requests = self._engine_requests(config, instance, e_min, run_dir, trace_id)
            certified = requests[0]["payload"]["schedule"].certified
            logger.info("running %d seeds of %s with n_jobs=%d", len(requests), config.name, config.n_jobs)
            results = Parallel(n_jobs=config.n_jobs)(delayed(_dispatch)(request) for request in requests)
            records = sorted((ResultRecord(**result["payload"]["record"]) for result in results), key=lambda r: r.key)

        summary = {
            "schema_version": SCHEMA_VERSION,
            "name": config.name,
            "engine": config.engine,
            "instance": instance.to_json_dict(),
            "e_min": e_min,
            "schedules": _schedule_rows(records, config.schedule_id(), certified),
            "records": [record.model_dump() for record in records],
            "lab_reports": lab_reports,
            "passed": all(report["pass"] for report in lab_reports),
        }
        path = write_json(summary, os.path.join(run_dir, "summary.json"), schema_name="summary")
        logger.info("summary written to %s", path)
        return summary

    def compare_schedules(self, configs: Sequence[ExperimentConfig], trace_id: Optional[str] = None) -> pd.DataFrame:
        """
        Runs each config and tabulates hit rate and steps-to-first-hit per
        schedule, with the closed-form t1 / t2 estimates for context.

        Args:
            configs (Sequence[ExperimentConfig]): At least two configs sharing
                the instance and the seed list.

        Returns:
            pd.DataFrame: One row per config with COMPARISON_COLUMNS.

        Raises:
            InvalidArgumentError: Fewer than two configs, or instances or seeds differ.
        """
        if len(configs) < 2:
            raise InvalidArgumentError("compare needs at least two configs")
        instances = [config.instance.load() for config in configs]
        for config, instance in zip(configs[1:], instances[1:]):
            if instance != instances[0]:
                raise InvalidArgumentError(f"config '{config.name}' uses a different instance than '{configs[0].name}'")
            if list(config.seeds) != list(configs[0].seeds):
                raise InvalidArgumentError(f"config '{config.name}' uses different seeds than '{configs[0].name}'")
        if any(config.engine == "lab" for config in configs):
            raise InvalidArgumentError("compare runs annealing engines only (pimc, sa, gfmc)")

        trace_id = trace_id or new_trace_id()
        rows = []
        for config, instance in zip(configs, instances):
            summary = self.run_experiment(config, trace_id)
            row = dict(summary["schedules"][0])
            row.update(config=config.name, engine=config.engine, **_estimates(config, instance))
            rows.append(row)
        table = pd.DataFrame(rows).reindex(columns=COMPARISON_COLUMNS)
        out_dir = configs[0].output.dir
        os.makedirs(out_dir, exist_ok=True)
        table.to_csv(os.path.join(out_dir, "comparison.csv"), index=False, float_format="%.12g")
        return table

    def _ground_energy(self, instance: IsingInstance, config: ExperimentConfig) -> Optional[float]:
        if instance.n_spins > config.enumeration_cap:
            logger.info("N=%d exceeds the enumeration cap; hits are not scored", instance.n_spins)
            return None
        return ground_states_bruteforce(instance, config.enumeration_cap).e_min

    def _engine_requests(
        self,
        config: ExperimentConfig,
        instance: IsingInstance,
        e_min: Optional[float],
        run_dir: str,
        trace_id: str,
    ) -> List[MCPMessage]:
        common = {
            "engine": config.engine,
            "instance": instance,
            "schedule_id": config.schedule_id(),
            "horizon": config.horizon,
            "checkpoint_every": config.checkpoint_every,
            "e_min": e_min,
            "out_dir": run_dir,
            "plots": config.output.plots,
        }
        if config.engine == "gfmc":
            params = config.gfmc_params(instance)
            common.update(params=params, schedule=config.resolve_schedule(instance, dt=params.dt), cap=config.enumeration_cap)
            message_type, receiver = "GFMC_REQUEST", GfmcAgent.name
        else:
            common.update(params=config.pimc.params(), schedule=config.resolve_schedule(instance))
            message_type, receiver = "ANNEAL_REQUEST", PimcAgent.name
        return [
            MCPMessage(
                sender=self.name,
                receiver=receiver,
                type=message_type,
                trace_id=trace_id,
                payload={**common, "seed": seed},
            )
            for seed in config.seeds
        ]


def _schedule_rows(records: List[ResultRecord], schedule_id: str, certified: bool) -> List[dict]:
    if not records:
        return []
    hits = [r.hit for r in records]
    scored = all(hit is not None for hit in hits)
    steps = [r.steps_to_first_hit for r in records if r.steps_to_first_hit is not None]
    return [{
        "schedule": schedule_id,
        "runs": len(records),
        "hit_rate": float(np.mean(hits)) if scored else None,
        "mean_best_energy": float(np.mean([r.best_energy for r in records])),
        "mean_steps_to_first_hit": float(np.mean(steps)) if steps else None,
        "certified": certified,
    }]


def _estimates(config: ExperimentConfig, instance: IsingInstance) -> dict:
    """t1 for transverse-field replica schedules, t2 for the generalized acceptance."""
    estimates = {"t1_estimate": None, "t2_estimate": None}
    if config.engine != "pimc":
        return estimates
    schedule = config.resolve_schedule(instance)
    m = config.pimc.trotter_M
    if schedule.control_kind is Control.GAMMA and replica_l1(m) > 0:
        estimates["t1_estimate"] = time_to_threshold(
            COMPARE_DELTA, "pimc_t1", R=instance.n_spins * m, L1=replica_l1(m), M=m, beta=config.pimc.beta,
        )
    if config.pimc.acceptance.kind is AcceptanceKind.TSALLIS:
        estimates["t2_estimate"] = time_to_threshold(COMPARE_DELTA, "tsallis_t2", N=instance.n_spins)
    return estimates
