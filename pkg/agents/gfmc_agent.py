import logging

from mcp.protocol import MCPMessage, reply
from utils.artifacts import make_record, plot_trace, trace_path, write_trace
from utils.gfmc import run_gfmc

logger = logging.getLogger(__name__)

PLOT_COLUMNS = ["gamma", "effective_population", "best_energy", "histogram_entropy"]


class GfmcAgent:
    """
    Runs one seed of the weighted-walker annealer and writes its trace.
    """

    name = "GfmcAgent"

    def run(self, message: MCPMessage) -> MCPMessage:
        """
        Args:
            message (MCPMessage): Message of type "GFMC_REQUEST" with payload
                instance, params (GfmcParams), schedule, schedule_id, horizon,
                seed, checkpoint_every, e_min, cap, out_dir and plots.

        Returns:
            MCPMessage: "ANNEAL_RESULT" whose record answer is the configuration
            of largest cumulative weight.
        """
        assert message["type"] == "GFMC_REQUEST"
        task = message["payload"]
        seed = task["seed"]
        e_min = task.get("e_min")

        trace = run_gfmc(
            task["instance"], task["params"], task["schedule"], task["horizon"], seed,
            checkpoint_every=task.get("checkpoint_every"),
            e_target=e_min,
            cap=task["cap"],
        )
        path = write_trace(trace.frame, trace_path(task["out_dir"], task["schedule_id"], seed))
        if task.get("plots"):
            plot_trace(trace.frame, path[:-len(".csv")] + ".svg", PLOT_COLUMNS, f"{task['schedule_id']} seed {seed}")

        record = make_record(seed, task["schedule_id"], trace.best_energy, trace.first_hit_step, path, e_min, trace.answer)
        logger.info("%s seed %d: best %.6g hit %s", task["schedule_id"], seed, record.best_energy, record.hit)
        return reply(message, self.name, "ANNEAL_RESULT", {"record": record.model_dump()})
