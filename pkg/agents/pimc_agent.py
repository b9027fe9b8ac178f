import logging

from mcp.protocol import MCPMessage, reply
from utils.artifacts import make_record, plot_trace, trace_path, write_trace
from utils.pimc import run_annealing, run_classical_annealing

logger = logging.getLogger(__name__)

PLOT_COLUMNS = ["control_value", "mean_slice_energy", "best_energy", "acceptance_rate"]


class PimcAgent:
    """
    Runs one seed of the replica chain (engine "pimc") or of the classical
    simulated annealing baseline (engine "sa") and writes its trace.
    """

    name = "PimcAgent"

    def anneal(self, message: MCPMessage) -> MCPMessage:
        """
        Args:
            message (MCPMessage): Message of type "ANNEAL_REQUEST" with payload
                engine, instance, params (PimcParams), schedule, schedule_id,
                horizon, seed, checkpoint_every, e_min, out_dir and plots.

        Returns:
            MCPMessage: "ANNEAL_RESULT" carrying the ResultRecord as a dict.
        """
        assert message["type"] == "ANNEAL_REQUEST"
        task = message["payload"]
        seed = task["seed"]
        e_min = task.get("e_min")

        if task["engine"] == "sa":
            trace = run_classical_annealing(
                task["instance"], task["schedule"], task["horizon"], seed,
                acceptance=task["params"].acceptance,
                checkpoint_every=task.get("checkpoint_every"),
                e_target=e_min,
            )
        else:
            trace = run_annealing(
                task["instance"], task["params"], task["schedule"], task["horizon"], seed,
                checkpoint_every=task.get("checkpoint_every"),
                e_target=e_min,
            )

        path = write_trace(trace.frame, trace_path(task["out_dir"], task["schedule_id"], seed))
        if task.get("plots"):
            plot_trace(trace.frame, path[:-len(".csv")] + ".svg", PLOT_COLUMNS, f"{task['schedule_id']} seed {seed}")

        record = make_record(seed, task["schedule_id"], trace.best_energy, trace.first_hit_step, path, e_min, trace.best_config)
        logger.info("%s seed %d: best %.6g hit %s", task["schedule_id"], seed, record.best_energy, record.hit)
        return reply(message, self.name, "ANNEAL_RESULT", {"record": record.model_dump()})
