import json

import pytest

from utils.config import OUTPUT_ENV, ExperimentConfig, load_config, parse_config
from utils.errors import ConfigurationError
from utils.gfmc import GreenVariant, default_dt
from utils.lab import ChainKind
from utils.schedules import ScheduleKind, first_defined_step


def _document(**overrides) -> dict:
    document = {
        "name": "unit",
        "instance": {"generator": {"n": 4, "dist": "pm_j", "seed": 7}},
        "engine": "pimc",
        "pimc": {"beta": 1.0, "trotter_M": 4},
        "schedule": {"kind": "corollary1", "params": {"M": "auto", "beta": "auto", "R": "auto", "L1": "auto"}},
    }
    document.update(overrides)
    return document


@pytest.fixture(autouse=True)
def no_output_override(monkeypatch):
    monkeypatch.delenv(OUTPUT_ENV, raising=False)


def test_json_syntax_errors_carry_line_and_column():
    with pytest.raises(ConfigurationError, match=r"^exp\.json:2:\d+: "):
        parse_config('{\n  "name": ,\n}', source="exp.json")


def test_schema_errors_carry_the_dotted_key_path():
    document = _document(pimc={"trotter_M": 0})
    with pytest.raises(ConfigurationError, match=r"pimc\.trotter_M: "):
        parse_config(json.dumps(document))
    document = _document(pimc={"acceptance": {"kind": "tsallis", "q": 0.5}})
    with pytest.raises(ConfigurationError, match=r"pimc\.acceptance: .*q > 1"):
        parse_config(json.dumps(document))


def test_unknown_keys_are_rejected():
    with pytest.raises(ConfigurationError, match="horizont"):
        parse_config(json.dumps(_document(horizont=10)))


def test_top_level_must_be_an_object():
    with pytest.raises(ConfigurationError, match="JSON object"):
        parse_config("[1, 2]")


@pytest.mark.parametrize(
    "instance",
    [
        {},
        {"file": "a.json", "generator": {"n": 2}},
    ],
)
def test_instance_source_needs_exactly_one_of_file_or_generator(instance):
    with pytest.raises(ConfigurationError, match="exactly one"):
        parse_config(json.dumps(_document(instance=instance)))


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigurationError, match="config file not found"):
        load_config(str(tmp_path / "absent.json"))


def test_relative_instance_paths_follow_the_config_file(tmp_path):
    (tmp_path / "ferro.json").write_text(json.dumps({"n_spins": 2, "couplings": [[0, 1, 1.0]]}), encoding="utf-8")
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(_document(instance={"file": "ferro.json"})), encoding="utf-8")
    config = load_config(str(path))
    assert config.instance.file == str(tmp_path / "ferro.json")
    assert config.instance.load().n_spins == 2


def test_missing_instance_file_is_reported(tmp_path):
    with pytest.raises(ConfigurationError, match="instance file not found"):
        parse_config(json.dumps(_document(instance={"file": "nowhere.json"})), base_dir=str(tmp_path))


def test_output_directory_env_override(monkeypatch, tmp_path):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "elsewhere"))
    config = parse_config(json.dumps(_document(output={"dir": "results", "plots": True})))
    assert config.output.dir == str(tmp_path / "elsewhere")
    assert config.output.plots


def test_defaults():
    config = parse_config(json.dumps(_document()))
    assert config.output.dir == "results"
    assert config.seeds == [0]
    assert config.horizon == 1000
    assert config.n_jobs == 1


def test_auto_params_come_from_the_engine_settings(glass4):
    config = parse_config(json.dumps(_document()))
    schedule = config.resolve_schedule(config.instance.load())
    assert schedule.kind is ScheduleKind.COROLLARY1
    assert schedule.params == {"M": 4.0, "beta": 1.0, "R": 16.0, "L1": 4.0}
    assert config.instance.load() == glass4


def test_auto_l1_follows_the_slice_count():
    single = _document(pimc={"beta": 1.0, "trotter_M": 1})
    config = parse_config(json.dumps(single))
    with pytest.raises(ConfigurationError, match=r"schedule\.params\.L1: .*single Trotter slice"):
        config.resolve_schedule(config.instance.load())
    explicit = _document(
        pimc={"beta": 1.0, "trotter_M": 1},
        schedule={"kind": "corollary1", "params": {"M": "auto", "beta": "auto", "R": "auto", "L1": 2.0}},
    )
    config = parse_config(json.dumps(explicit))
    assert config.resolve_schedule(config.instance.load()).params["L1"] == 2.0


def test_reach_of_the_walker_chain_is_n():
    document = _document(
        engine="gfmc",
        schedule={"kind": "theorem3_T1", "params": {"R": "auto", "L1": "auto"}},
    )
    config = ExperimentConfig.model_validate(document)
    assert not config.replica_chain
    assert config.resolve_schedule(config.instance.load()).params["R"] == 4.0


def test_auto_without_a_source_is_an_error():
    document = _document(schedule={"kind": "tsallis_T1", "params": {"c": "auto"}})
    config = parse_config(json.dumps(document))
    with pytest.raises(ConfigurationError, match=r"schedule\.params\.c"):
        config.resolve_schedule(config.instance.load())


def test_schedule_errors_surface_as_configuration_errors():
    config = parse_config(json.dumps(_document(schedule={"kind": "corollary1", "params": {"M": "auto"}})))
    with pytest.raises(ConfigurationError, match="missing params"):
        config.resolve_schedule(config.instance.load())


def test_auto_offset_is_only_for_g2():
    document = _document(schedule={"kind": "theorem3_T1", "params": {"R": "auto", "L1": "auto"}, "offset": "auto"})
    config = parse_config(json.dumps(document))
    with pytest.raises(ConfigurationError, match=r"schedule\.offset"):
        config.resolve_schedule(config.instance.load())


def test_schedule_id():
    schedule = {"kind": "corollary1", "params": {"M": "auto", "beta": "auto", "R": "auto", "L1": "auto"}}
    assert ExperimentConfig.model_validate(_document()).schedule_id() == "corollary1"
    assert ExperimentConfig.model_validate(_document(schedule={**schedule, "scale": 0.5})).schedule_id() == "corollary1x0.5"
    assert ExperimentConfig.model_validate(_document(schedule={**schedule, "label": "fast"})).schedule_id() == "fast"


def test_gfmc_params_default_time_step(glass4):
    document = _document(engine="gfmc", schedule={"kind": "gfmc_power", "params": {"b": 1.0, "c": 0.25, "N": "auto"}})
    config = ExperimentConfig.model_validate(document)
    params = config.gfmc_params(glass4)
    assert params.e_t == 0.0
    assert params.dt == pytest.approx(default_dt(glass4, 0.0, 1.0))
    assert params.variant is GreenVariant.G1


def test_gfmc_params_explicit_time_step(glass4):
    document = _document(
        engine="gfmc",
        gfmc={"dt": 0.01, "e_t": 0.5},
        schedule={"kind": "gfmc_power", "params": {"c": 0.25, "N": "auto"}},
    )
    params = ExperimentConfig.model_validate(document).gfmc_params(glass4)
    assert params.dt == 0.01
    assert params.e_t == 0.5


def test_lab_chain_spec_for_g2(glass4):
    document = _document(
        engine="lab",
        lab={"chain": "gfmc_g2", "checks": ["stationarity"]},
        schedule={"kind": "gfmc_g2", "params": {"b": 0.25, "dt": "auto", "N": "auto"}, "offset": "auto"},
    )
    config = ExperimentConfig.model_validate(document)
    spec = config.chain_spec(glass4)
    assert spec.kind is ChainKind.GFMC_G2
    # the variant follows the analysed chain, not the gfmc block
    assert spec.params.variant is GreenVariant.G2
    assert spec.params.dt == pytest.approx(default_dt(glass4, 0.0, 0.25))
    assert spec.schedule.params["dt"] == spec.params.dt
    assert spec.schedule.offset == first_defined_step(0.25, 4)


def test_lab_chain_spec_for_the_replica_chain(glass4):
    document = _document(
        engine="lab",
        pimc={"beta": 2.0, "trotter_M": 2},
        lab={"chain": "pimc_boltzmann"},
        schedule={"kind": "theorem3_T1", "params": {"R": "auto", "L1": "auto"}},
    )
    config = ExperimentConfig.model_validate(document)
    assert config.replica_chain
    spec = config.chain_spec(glass4)
    assert spec.kind is ChainKind.PIMC_BOLTZMANN
    assert spec.params.trotter_slices == 2
    assert spec.schedule.params == {"R": 8.0, "L1": 4.0}
