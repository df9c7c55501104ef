import copy
import json

import numpy as np
import pytest

from core.errors import ConfigError, PreconditionError
from scenarios.preset_manager import PresetManager
from scenarios.scenario import DeltaT
from scenarios.scenario_parser import ScenarioParser
from services.config_service import DEFAULT_SETTINGS, ConfigService


@pytest.fixture
def parser():
    return ScenarioParser()


@pytest.fixture
def write_scenario(tmp_path):
    def write(document, name="scenario.json"):
        path = tmp_path / name
        path.write_text(document if isinstance(document, str) else json.dumps(document))
        return str(path)
    return write


def scenario_with(document, **changes):
    document = copy.deepcopy(document)
    for key, value in changes.items():
        if value is None:
            document.pop(key, None)
        else:
            document[key] = value
    return document


def test_all_presets_parse(parser):
    presets = PresetManager()
    assert presets.names() == ["bell", "dephasing_idle", "pointer_benchmark", "rank2_sector"]
    for name in presets.names():
        scenario = parser.parse(presets.resolve(name))
        assert scenario.name == name


def test_bell_preset(parser):
    scenario = parser.parse(PresetManager().resolve("bell"))
    assert scenario.seed == 7
    assert scenario.samples == 50
    assert [c.id for c in scenario.candidates] == ["computational", "hadamard"]
    assert scenario.sieve_delta_t.value == 1.0
    assert scenario.steps is None
    assert scenario.psi is not None
    np.testing.assert_allclose(scenario.spec.hamiltonian, np.zeros((4, 4)))


def test_pointer_benchmark_preset(parser):
    scenario = parser.parse(PresetManager().resolve("pointer_benchmark"))
    assert (scenario.space.dim_a, scenario.space.dim_b) == (16, 2)
    assert scenario.spec.environment_dim == 4
    assert scenario.apparatus.labels[0] == "z:00"
    assert scenario.sieve_delta_t.needs_tau
    assert scenario.run_delta_t.tau_multiple == 10
    assert scenario.steps == 20
    assert scenario.summary()["run"]["channel"] == "modified"


def test_missing_seed_is_a_schema_error(parser, write_scenario, base_scenario):
    with pytest.raises(ConfigError) as info:
        parser.parse(write_scenario(scenario_with(base_scenario, seed=None)))
    assert info.value.violations[0].invariant == "schema"
    assert any("'seed'" in v.detail for v in info.value.violations)


def test_malformed_json_reports_line(parser, write_scenario):
    with pytest.raises(ConfigError) as info:
        parser.parse(write_scenario('{\n  "name": "x",\n  "seed": \n}'))
    assert info.value.line == 4
    assert info.value.context == "}"
    assert "riga 4" in str(info.value)


def test_missing_file(parser, tmp_path):
    with pytest.raises(ConfigError) as info:
        parser.parse(str(tmp_path / "absent.json"))
    assert info.value.violations[0].invariant == "readable"


def test_incomplete_sectors_fail_exhaustiveness(parser, write_scenario, base_scenario):
    document = scenario_with(base_scenario, apparatus={"basis": "computational", "sectors": [[0]]})
    with pytest.raises(ConfigError) as info:
        parser.parse(write_scenario(document))
    assert info.value.violations[0].invariant == "exhaustiveness"


def test_zero_steps_is_a_schema_error(parser, write_scenario, base_scenario):
    with pytest.raises(ConfigError) as info:
        parser.parse(write_scenario(scenario_with(base_scenario, run={"delta_t": 1.0, "steps": 0})))
    assert any(v.detail.startswith("run/steps") for v in info.value.violations)


def test_semantic_errors(parser, write_scenario, base_scenario):
    hadamard_on_qutrit = scenario_with(
        base_scenario,
        space={"dim_a": 3, "dim_b": 1},
        initial_state={"coefficients": [[1.0], [0.0], [0.0]]},
        apparatus={"basis": "hadamard"},
    )
    pointer_without_model = scenario_with(base_scenario, apparatus={"basis": "pointer_z"})
    sector_out_of_range = scenario_with(base_scenario, apparatus={"basis": "computational", "sectors": [[0], [1, 2]]})
    for document in (hadamard_on_qutrit, pointer_without_model, sector_out_of_range):
        with pytest.raises(ConfigError) as info:
            parser.parse(write_scenario(document))
        assert info.value.violations[0].invariant == "semantics"


def test_non_hermitian_hamiltonian(parser, write_scenario, base_scenario):
    document = scenario_with(base_scenario, dynamics={"hamiltonian": [[0, 1, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]]})
    with pytest.raises(ConfigError, match="incoerente"):
        parser.parse(write_scenario(document))


def test_space_or_model_required(parser, write_scenario, base_scenario):
    with pytest.raises(ConfigError, match="'space'"):
        parser.parse(write_scenario(scenario_with(base_scenario, space=None)))


def test_seed_override_and_random_state(parser, write_scenario, base_scenario):
    path = write_scenario(scenario_with(base_scenario, initial_state={"random": {"kind": "mixed", "rank": 2}}))
    first = parser.parse(path)
    again = parser.parse(path)
    other = parser.parse(path, seed=99)
    assert other.seed == 99
    np.testing.assert_array_equal(first.rho.matrix, again.rho.matrix)
    assert not np.allclose(first.rho.matrix, other.rho.matrix)
    assert np.sum(first.rho.eigenvalues() > 1e-12) == 2


def test_explicit_basis(parser, write_scenario, base_scenario):
    document = scenario_with(base_scenario, apparatus={
        "basis": "explicit",
        "sectors": [[[0.7071067811865476, 0.7071067811865476]], [[0.7071067811865476, -0.7071067811865476]]],
        "labels": ["plus", "minus"],
    })
    scenario = parser.parse(write_scenario(document))
    assert scenario.apparatus.labels == ("plus", "minus")
    np.testing.assert_allclose(scenario.apparatus.sector_state_a(0), np.full((2, 2), 0.5), atol=1e-12)


def test_default_samples(write_scenario, base_scenario):
    scenario = ScenarioParser(default_samples=17).parse(write_scenario(base_scenario))
    assert scenario.samples == 17
    assert scenario.candidates == ()


def test_delta_t_resolution():
    assert DeltaT.from_config(0.5).resolve() == 0.5
    relative = DeltaT.from_config({"tau_multiple": 10})
    assert relative.needs_tau
    assert relative.resolve(0.15) == pytest.approx(1.5)
    assert relative.as_dict() == {"tau_multiple": 10.0}
    with pytest.raises(PreconditionError):
        relative.resolve(float("inf"))
    with pytest.raises(PreconditionError):
        relative.resolve()


def test_preset_manager_resolution(write_scenario, base_scenario):
    presets = PresetManager()
    assert presets.resolve("bell").endswith("bell.json")
    path = write_scenario(base_scenario)
    assert presets.resolve(path) == path
    with pytest.raises(ConfigError) as info:
        presets.resolve("nonexistent")
    assert info.value.violations[0].invariant == "readable"
    assert "bell" in str(info.value)


def test_preset_manager_without_registry(tmp_path):
    presets = PresetManager(str(tmp_path / "missing.json"))
    assert presets.names() == []


def test_config_service_defaults_and_overrides(tmp_path):
    (tmp_path / "config_settings.json").write_text(json.dumps({"settings": {"MUCH_LESS_FACTOR": 20, "BOGUS": 1}}))
    service = ConfigService(str(tmp_path))
    assert service.get("MUCH_LESS_FACTOR") == 20.0
    assert isinstance(service.get("MUCH_LESS_FACTOR"), float)
    assert service.get("DEFAULT_SAMPLES") == DEFAULT_SETTINGS["DEFAULT_SAMPLES"]
    assert "BOGUS" not in service.settings
    with pytest.raises(KeyError):
        service.get("BOGUS")
    assert ConfigService(str(tmp_path / "empty")).get("SIGNIFICANT_DIGITS") == 12


def test_dimension_cap_is_a_parser_setting(write_scenario, base_scenario):
    document = scenario_with(base_scenario, space=None, model={"environment_qubits": 4},
                             initial_state={"model": True}, apparatus={"basis": "pointer_z"})
    path = write_scenario(document)
    with pytest.raises(ConfigError, match="limite 64"):
        ScenarioParser().parse(path)
    scenario = ScenarioParser(dimension_cap=128).parse(path)
    assert scenario.space.dim == 128
    assert scenario.spec.dimension_cap == 128
