import json
import logging
import os
from typing import Iterable, List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402
from jsonschema import Draft202012Validator  # noqa: E402
from pydantic import BaseModel, Field  # noqa: E402
from referencing import Registry, Resource  # noqa: E402

from utils.ising import ENERGY_TOL  # noqa: E402

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"
SCHEMA_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "schemas")
FLOAT_FORMAT = "%.12g"


def load_schema(name: str) -> dict:
    """Loads schemas/<name>.schema.json."""
    with open(os.path.join(SCHEMA_DIR, f"{name}.schema.json"), "r", encoding="utf-8") as f:
        return json.load(f)


def _registry() -> Registry:
    # summary.schema.json refers to lab_report.schema.json by relative $ref
    resources = []
    for filename in sorted(os.listdir(SCHEMA_DIR)):
        if filename.endswith(".schema.json"):
            schema = load_schema(filename[: -len(".schema.json")])
            resources.append((schema["$id"], Resource.from_contents(schema)))
    return Registry().with_resources(resources)


def validate(document: dict, schema_name: str) -> None:
    """
    Validates a document against a published schema.

    Raises:
        jsonschema.ValidationError: On the first violation.
    """
    Draft202012Validator(load_schema(schema_name), registry=_registry()).validate(document)


def trace_path(out_dir: str, schedule_id: str, seed: int) -> str:
    safe = "".join(c if c.isalnum() or c in "-_." else "_" for c in schedule_id)
    return os.path.join(out_dir, "traces", f"{safe}_seed{seed}.csv")


def write_trace(frame: pd.DataFrame, path: str) -> str:
    """CSV with a fixed float format so reruns are byte-identical."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def write_json(document: dict, path: str, schema_name: Optional[str] = None) -> str:
    if schema_name is not None:
        validate(document, schema_name)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(document, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def plot_trace(frame: pd.DataFrame, path: str, columns: Iterable[str], title: str = "") -> str:
    """Standalone SVG line plot of trace columns against step."""
    columns = [c for c in columns if c in frame.columns and c != "step"]
    fig, axes = plt.subplots(len(columns), 1, figsize=(6, 2.2 * max(len(columns), 1)), sharex=True, squeeze=False)
    for ax, column in zip(axes[:, 0], columns):
        ax.plot(frame["step"], frame[column], linewidth=1.0)
        ax.set_ylabel(column)
    axes[-1, 0].set_xlabel("step")
    if title:
        axes[0, 0].set_title(title)
    fig.tight_layout()
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fig.savefig(path, format="svg")
    plt.close(fig)
    logger.debug("wrote plot %s", path)
    return path


class ResultRecord(BaseModel):
    """
    One (schedule, seed) run.

    hit and steps_to_first_hit stay None when E_min is unknown (no brute force).
    """

    seed: int
    schedule: str
    best_energy: float
    hit: Optional[bool] = None
    steps_to_first_hit: Optional[int] = None
    trace: str
    answer: List[int] = Field(default_factory=list)

    @property
    def key(self) -> Tuple[str, int]:
        return self.schedule, self.seed


def make_record(
    seed: int,
    schedule_id: str,
    best_energy: float,
    first_hit_step: Optional[int],
    trace: str,
    e_min: Optional[float],
    answer: Sequence[int] = (),
) -> ResultRecord:
    known = e_min is not None
    return ResultRecord(
        seed=seed,
        schedule=schedule_id,
        best_energy=best_energy,
        hit=bool(best_energy <= e_min + ENERGY_TOL) if known else None,
        steps_to_first_hit=first_hit_step if known else None,
        trace=trace,
        answer=[int(s) for s in answer],
    )
