import json
import logging
import os
from typing import Dict, List, Literal, Optional, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from utils.errors import ConfigurationError
from utils.gfmc import GfmcParams, GreenVariant, PopulationControl, default_dt, resolve_reference_energy
from utils.ising import DEFAULT_ENUMERATION_CAP, IsingInstance, random_instance
from utils.lab import ChainKind, ChainSpec
from utils.pimc import DEFAULT_LAB_CAP, AcceptanceKind, PimcParams, replica_l1
from utils.schedules import DEFAULT_B, Control, Schedule, ScheduleKind, first_defined_step

logger = logging.getLogger(__name__)

OUTPUT_ENV = "QAE_OUT"


class GeneratorSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: int = Field(ge=1)
    dist: Literal["pm_j", "gaussian"] = "pm_j"
    sigma: float = Field(default=1.0, gt=0.0)
    seed: int = 0
    topology: Literal["complete", "ring"] = "complete"


class InstanceSource(BaseModel):
    """Either {"file": path} or {"generator": {...}}."""

    model_config = ConfigDict(extra="forbid")

    file: Optional[str] = None
    generator: Optional[GeneratorSpec] = None

    @model_validator(mode="after")
    def _exactly_one(self):
        if (self.file is None) == (self.generator is None):
            raise ValueError("give exactly one of 'file' or 'generator'")
        return self

    def load(self) -> IsingInstance:
        if self.file is not None:
            return IsingInstance.from_file(self.file)
        g = self.generator
        return random_instance(g.n, g.dist, g.seed, g.sigma, g.topology)


class AcceptanceConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: AcceptanceKind = AcceptanceKind.HEAT_BATH
    q: Optional[float] = None
    g: AcceptanceKind = AcceptanceKind.HEAT_BATH

    @model_validator(mode="after")
    def _check_q(self):
        if self.kind is AcceptanceKind.TSALLIS and (self.q is None or self.q <= 1.0):
            raise ValueError("tsallis acceptance requires q > 1")
        return self


class PimcConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    beta: float = Field(default=1.0, gt=0.0)
    trotter_M: int = Field(default=4, ge=1)
    acceptance: AcceptanceConfig = AcceptanceConfig()

    def params(self) -> PimcParams:
        return PimcParams(
            beta=self.beta,
            trotter_slices=self.trotter_M,
            acceptance=self.acceptance.kind,
            q=self.acceptance.q,
            g=self.acceptance.g,
        )


class GfmcConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dt: Optional[float] = Field(default=None, gt=0.0)
    e_t: Union[float, Literal["auto", "e_min"]] = "auto"
    n_walkers: int = Field(default=1000, ge=1)
    variant: GreenVariant = GreenVariant.G1
    population_control: PopulationControl = PopulationControl()


class LabConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    chain: Literal["pimc_boltzmann", "pimc_tsallis", "gfmc_g1", "gfmc_g2"] = "pimc_boltzmann"
    checks: List[str] = Field(default_factory=lambda: ["stationarity"], min_length=1)
    t_max: int = Field(default=10 ** 4, ge=1)
    blocks: int = Field(default=200, ge=1)


class ScheduleConfig(BaseModel):
    """
    Schedule block of a config. Params may be "auto" for M, beta, N, R, L1
    and dt (taken from the engine settings), and offset may be "auto" for
    gfmc_g2 (first step where the schedule is defined).
    """

    model_config = ConfigDict(extra="forbid")

    kind: ScheduleKind
    params: Dict[str, Union[float, Literal["auto"]]] = Field(default_factory=dict)
    scale: float = Field(default=1.0, gt=0.0)
    offset: Union[int, Literal["auto"]] = 0
    control: Optional[Control] = None
    label: Optional[str] = None


class OutputConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dir: str = "results"
    plots: bool = False


class ExperimentConfig(BaseModel):
    """
    One experiment: instance, engine settings, schedule, seeds and outputs.
    """

    model_config = ConfigDict(extra="forbid")

    name: str = "experiment"
    instance: InstanceSource
    engine: Literal["pimc", "sa", "gfmc", "lab"] = "pimc"
    pimc: PimcConfig = PimcConfig()
    gfmc: GfmcConfig = GfmcConfig()
    lab: LabConfig = LabConfig()
    schedule: ScheduleConfig
    horizon: int = Field(default=1000, ge=1)
    seeds: List[int] = Field(default_factory=lambda: [0], min_length=1)
    checkpoint_every: Optional[int] = Field(default=None, ge=1)
    enumeration_cap: int = Field(default=DEFAULT_ENUMERATION_CAP, ge=1)
    lab_cap: int = Field(default=DEFAULT_LAB_CAP, ge=1)
    n_jobs: int = 1
    output: OutputConfig = OutputConfig()

    @model_validator(mode="after")
    def _check_files(self):
        if self.instance.file is not None and not os.path.exists(self.instance.file):
            raise ValueError(f"instance file not found: {self.instance.file}")
        return self

    def schedule_id(self) -> str:
        if self.schedule.label:
            return self.schedule.label
        suffix = "" if self.schedule.scale == 1.0 else f"x{self.schedule.scale:g}"
        return f"{self.schedule.kind.value}{suffix}"

    @property
    def replica_chain(self) -> bool:
        return self.engine == "pimc" or (self.engine == "lab" and self.lab.chain.startswith("pimc"))

    def resolve_schedule(self, instance: IsingInstance, dt: Optional[float] = None) -> Schedule:
        """
        Builds the Schedule, filling "auto" params from the engine settings.

        R is the single-flip reach of the state space: N * M for the replica
        chain, N for the walkers.
        """
        spec = self.schedule
        n = instance.n_spins
        m = self.pimc.trotter_M
        auto = {
            "M": float(m),
            "beta": self.pimc.beta,
            "N": float(n),
            "R": float(n * m) if self.replica_chain else float(n),
        }
        if replica_l1(m) > 0:
            auto["L1"] = replica_l1(m)
        if dt is not None:
            auto["dt"] = dt
        params = {}
        for key, value in spec.params.items():
            if value == "auto":
                if key == "L1" and key not in auto:
                    raise ConfigurationError("schedule.params.L1: L1 is 0 with a single Trotter slice, set it explicitly")
                if key not in auto:
                    raise ConfigurationError(f"schedule.params.{key}: no automatic value available")
                params[key] = auto[key]
            else:
                params[key] = float(value)
        offset = spec.offset
        if offset == "auto":
            if spec.kind is not ScheduleKind.GFMC_G2:
                raise ConfigurationError("schedule.offset: 'auto' is only meaningful for gfmc_g2")
            offset = first_defined_step(params.get("b", 1.0), int(params["N"]))
        try:
            return Schedule(kind=spec.kind, params=params, scale=spec.scale, offset=offset, control=spec.control)
        except ValidationError as exc:
            raise ConfigurationError(_describe_validation(exc, prefix="schedule")) from exc

    def gfmc_params(self, instance: IsingInstance) -> GfmcParams:
        """
        Resolves E_T and the default time step 0.5 / (E_max - E_T + N Gamma(0)).

        Gamma(0) comes from the schedule, or from its b param when the
        schedule itself needs dt.
        """
        cfg = self.gfmc
        e_t = resolve_reference_energy(instance, cfg.e_t, self.enumeration_cap)
        dt = cfg.dt
        if dt is None:
            if self.schedule.params.get("dt") == "auto":
                b = self.schedule.params.get("b", DEFAULT_B)
                gamma0 = float(b) if b != "auto" else DEFAULT_B
            else:
                gamma0 = float(self.resolve_schedule(instance).value(0))
            dt = default_dt(instance, e_t, gamma0)
        variant = GreenVariant.G2 if self.engine == "lab" and self.lab.chain == "gfmc_g2" else cfg.variant
        return GfmcParams(
            dt=dt,
            e_t=e_t,
            n_walkers=cfg.n_walkers,
            variant=variant,
            population_control=cfg.population_control,
        )

    def chain_spec(self, instance: IsingInstance) -> ChainSpec:
        """The exact chain analysed by engine "lab"."""
        kind = ChainKind(self.lab.chain)
        if kind.is_pimc:
            params = self.pimc.params()
            schedule = self.resolve_schedule(instance)
        else:
            params = self.gfmc_params(instance)
            schedule = self.resolve_schedule(instance, dt=params.dt)
        try:
            return ChainSpec(kind=kind, instance=instance, params=params, schedule=schedule, cap=self.lab_cap)
        except ValidationError as exc:
            raise ConfigurationError(_describe_validation(exc, prefix="lab")) from exc


def _describe_validation(exc: ValidationError, prefix: str = "") -> str:
    lines = []
    for error in exc.errors():
        path = ".".join(str(part) for part in ((prefix,) if prefix else ()) + tuple(error["loc"]))
        lines.append(f"{path or '<root>'}: {error['msg']}")
    return "; ".join(lines)


def parse_config(text: str, source: str = "<config>", base_dir: Optional[str] = None) -> ExperimentConfig:
    """
    Parses a JSON experiment config.

    Args:
        text (str): JSON document.
        source (str): Name used in error messages.
        base_dir (str): Directory that relative instance paths are resolved against.

    Returns:
        ExperimentConfig: The validated config, with QAE_OUT applied.

    Raises:
        ConfigurationError: With line and column for JSON syntax errors and
            the dotted key path for schema errors.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f"{source}: top level must be a JSON object")

    instance = data.get("instance")
    if base_dir and isinstance(instance, dict) and isinstance(instance.get("file"), str):
        if not os.path.isabs(instance["file"]):
            instance["file"] = os.path.join(base_dir, instance["file"])

    try:
        config = ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigurationError(f"{source}: {_describe_validation(exc)}") from exc

    load_dotenv()
    override = os.getenv(OUTPUT_ENV)
    if override:
        logger.info("output directory overridden by %s=%s", OUTPUT_ENV, override)
        config = config.model_copy(update={"output": OutputConfig(dir=override, plots=config.output.plots)})
    return config


def load_config(path: str) -> ExperimentConfig:
    if not os.path.exists(path):
        raise ConfigurationError(f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    return parse_config(text, source=path, base_dir=os.path.dirname(os.path.abspath(path)))
