"""
Verifiche di proprietà su molti stati e apparati casuali, più gli oracoli
in forma chiusa sui preset. I test più costosi sono marcati `slow`.
"""
import json
import time

import numpy as np
import pytest

from algebra.operator_algebra import generated_algebra, superselection_sectors, verify_duality
from core.tensor_space import BipartiteSpace, partial_trace_a
from dynamics.dynamics_sieve import check_timescales, estimate_decoherence_time, repeated_reduction_run, sieve, stability_time
from main import main
from reduction.entropy_analysis import entropy_chain, sample_equivalence_class, shannon_entropy, verify_max_entropy, von_neumann_entropy
from reduction.reduction import dlp_reduce, equivalent_modified, modified_reduce, representatives_equal
from scenarios.preset_manager import PresetManager
from scenarios.scenario_parser import ScenarioParser
from states.states import computational_sectors, conditional_states, make_pure, random_apparatus, random_density_operator

DIMS = [(2, 2), (4, 2), (4, 4)]
PRESET_COMMANDS = {
    "bell": ("validate", "reduce", "compare", "sieve"),
    "rank2_sector": ("validate", "reduce", "compare"),
    "pointer_benchmark": ("validate", "reduce", "compare", "sieve", "run"),
    "dephasing_idle": ("validate", "reduce", "compare", "sieve", "run"),
}


def load_preset(name):
    return ScenarioParser().parse(PresetManager().resolve(name))


@pytest.mark.slow
@pytest.mark.parametrize("dims", DIMS)
def test_sector_round_trip_and_duality(dims):
    rng = np.random.default_rng(1000 + dims[0] * 10 + dims[1])
    space = BipartiteSpace(*dims)
    started = time.perf_counter()
    for _ in range(50):
        apparatus = random_apparatus(space, rng)
        algebra = generated_algebra(apparatus)
        assert algebra.linear_dimension == sum((d * space.dim_b) ** 2 for d in apparatus.dims_a)
        recovered = superselection_sectors(algebra)
        assert len(recovered) == len(apparatus)
        for p in apparatus.projectors:
            errors = [np.max(np.abs(q - p)) for q in recovered.projectors]
            assert min(errors) <= 1e-8
        report = verify_duality(apparatus)
        assert report.passed, report.as_dict()
        assert max(report.residuals.values()) <= 1e-9
    assert time.perf_counter() - started <= 60.0


def test_equivalence_agrees_with_representatives():
    rng = np.random.default_rng(3)
    space = BipartiteSpace(4, 2)
    disagreements = 0
    for k in range(500):
        apparatus = random_apparatus(space, rng)
        rho = random_density_operator(space, rng)
        rep = modified_reduce(rho, apparatus)
        if k % 2:
            sigma = random_density_operator(space, rng)
        else:
            sigma = sample_equivalence_class(rep, 1, seed=k)[0]
        same_rep = representatives_equal(rep.rho_hat, modified_reduce(sigma, apparatus).rho_hat)[0]
        for a, b in ((rho, sigma), (sigma, rho)):
            if equivalent_modified(a, b, apparatus)[0] != same_rep:
                disagreements += 1
    assert disagreements == 0


@pytest.mark.slow
@pytest.mark.parametrize("dims", [(4, 2), (4, 4)])
def test_no_class_member_exceeds_the_representative_entropy(dims):
    rng = np.random.default_rng(dims[1])
    space = BipartiteSpace(*dims)
    for k in range(100):
        apparatus = random_apparatus(space, rng)
        rep = modified_reduce(random_density_operator(space, rng, rank=int(rng.integers(1, space.dim + 1))), apparatus)
        report = verify_max_entropy(rep, 200, seed=k)
        assert report.min_gap >= -1e-8


def test_entropy_ordering_chain():
    rng = np.random.default_rng(5)
    for k in range(1000):
        space = BipartiteSpace(*DIMS[k % len(DIMS)])
        apparatus = random_apparatus(space, rng)
        rank = int(rng.integers(1, space.dim + 1))
        report = entropy_chain(random_density_operator(space, rng, rank=rank), apparatus)
        assert report.s_rho <= report.s_luders + 1e-9
        assert report.s_luders <= report.s_modified + 1e-9
        identity = shannon_entropy([s.weight for s in report.sectors]) + sum(
            s.weight * (np.log(s.dim_a) + s.entropy_b) for s in report.sectors)
        assert abs(report.s_modified - identity) <= 1e-8


def test_bell_closed_form(tmp_path):
    out = tmp_path / "bell"
    assert main(["reduce", "bell", "--out", str(out), "--log-file", str(tmp_path / "log")]) == 0
    results = json.loads((out / "report_reduce.json").read_text())["results"]
    assert results["weights"] == pytest.approx([0.5, 0.5], abs=1e-12)
    for sector, expected in zip(results["sectors"], (np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))):
        state = np.array(sector["conditional_state_b"])[..., 0]
        np.testing.assert_allclose(state, expected, atol=1e-12)
    assert results["entropy"]["S_modified"] == pytest.approx(0.693147, abs=1e-6)
    assert results["entropy"]["jaynes_gap"] == pytest.approx(0.0, abs=1e-9)


def test_single_relative_direction_gives_pure_conditional_states():
    rng = np.random.default_rng(9)
    space = BipartiteSpace(4, 2)
    apparatus = computational_sectors(space, [[0, 1], [2, 3]])
    for _ in range(20):
        coefficients = np.zeros((4, 2), dtype=complex)
        for sector in ([0, 1], [2, 3]):
            b = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            a = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            coefficients[sector] = np.outer(a, b)
        psi, rho = make_pure(space, coefficients / np.linalg.norm(coefficients))
        for c in conditional_states(rho, apparatus):
            assert c.state.purity() >= 1 - 1e-9
        assert max(dlp_reduce(psi, apparatus).purity_deficits.values()) <= 1e-9


def test_rank2_preset_purity_deficit_and_partial_trace_oracle():
    scenario = load_preset("rank2_sector")
    reduction = dlp_reduce(scenario.psi, scenario.apparatus)
    assert reduction.purity_deficits[0] > 0.01
    rep = modified_reduce(scenario.rho, scenario.apparatus)
    dims = (scenario.space.dim_a, scenario.space.dim_b)
    for s, p in zip(rep.sectors, scenario.apparatus.projectors):
        oracle = np.einsum("abac->bc", (p @ scenario.rho.matrix).reshape(dims * 2)) / s.weight
        np.testing.assert_allclose(s.state_b.matrix, oracle, atol=1e-10)
        np.testing.assert_allclose(partial_trace_a(p @ scenario.rho.matrix, scenario.space) / s.weight, oracle, atol=1e-12)


def test_sieve_selects_pointer_basis_on_preset():
    scenario = load_preset("pointer_benchmark")
    started = time.perf_counter()
    tau = estimate_decoherence_time(scenario.spec, scenario.apparatus).tau_dec
    report = sieve(scenario.spec, [c.apparatus for c in scenario.candidates], scenario.sieve_delta_t.resolve(tau),
                   candidate_ids=[c.id for c in scenario.candidates])
    assert report.winner_id == "pointer_z"
    assert report.entropies[1] - report.entropies[0] >= 0.05
    assert time.perf_counter() - started <= 30.0


def test_timescales_and_second_law_on_benchmark():
    scenario = load_preset("pointer_benchmark")
    tau = estimate_decoherence_time(scenario.spec, scenario.apparatus).tau_dec
    delta_t = 10 * tau
    candidates = [c.apparatus for c in scenario.candidates]
    trajectory = repeated_reduction_run(scenario.spec, scenario.apparatus, delta_t, 20, candidates=candidates)
    stability = stability_time(trajectory)
    assert stability.unbounded
    assert check_timescales(tau, delta_t, stability.tau_p).passed
    s_mod = np.array(trajectory.s_modified)
    assert np.all(np.diff(s_mod) >= -1e-8)
    assert np.all(s_mod >= np.array(trajectory.s_luders) - 1e-9)
    assert von_neumann_entropy(scenario.rho) <= s_mod[0]


@pytest.mark.slow
@pytest.mark.parametrize("preset", sorted(PRESET_COMMANDS))
def test_presets_are_deterministic(preset, tmp_path):
    for command in PRESET_COMMANDS[preset]:
        outputs = []
        for attempt in ("first", "second"):
            out = tmp_path / command / attempt
            assert main([command, preset, "--out", str(out), "--log-file", str(tmp_path / "log")]) == 0
            outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir()) if p.name != "timing.json"})
        assert outputs[0] == outputs[1]
        assert f"report_{command}.json" in outputs[0]
