import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import distribution as dense_distribution
from qedprim import Circuit
from qedprim.circuit import Op, cnot, h, measure, x
from qedprim.layout import FlagPlacement, flagged_chain
from qedprim.metrics import process_fidelity_from_superop
from qedprim.protocols import (
    FanoutSpec,
    GhzSpec,
    TeleportSpec,
    build_fanout,
    build_ghz,
    build_measurement_based_cnot,
    build_unitary_ed_cnot,
    measure_data,
)
from qedprim.sim import (
    PRESETS,
    Counts,
    NoiseModel,
    OracleLimitError,
    SimulationLimitError,
    exact_channel,
    exact_distribution,
    get_preset,
    logical_channel,
    run_exact,
    run_shot,
    run_shots,
    sample_counts,
    sample_many,
)
from qedprim.sim.compile import compile_circuit
from qedprim.sim.kernels import apply_1q
from qedprim.sim.trajectory import _run_batch, _run_terminal, _terminal_split


def _within(p_hat, p, shots, k=5.0):
    sigma = np.sqrt(max(p * (1 - p), 1e-12) / shots)
    return abs(p_hat - p) <= k * sigma + 1e-12


class TestNoiseModel:
    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            NoiseModel(p2=1.5)

    def test_rejects_infinite_coherent_error(self):
        with pytest.raises(ValueError):
            NoiseModel(coherent_z=float("inf"))

    def test_unknown_preset(self):
        with pytest.raises(KeyError):
            get_preset("nope")

    def test_presets_present(self):
        assert {"noiseless", "bitflip", "dephasing", "ibm-like", "suppression-off"} <= set(PRESETS)

    def test_readout_ratio_of_hardware_like_preset(self):
        nm = get_preset("ibm-like")
        ratio = 0.5 * (nm.eps01 + nm.eps10) / nm.p2
        assert 3 <= ratio <= 6

    def test_suppression_removes_coherent_error(self):
        assert get_preset("ibm-like").effective_coherent_z == 0.0
        assert get_preset("suppression-off").effective_coherent_z != 0.0

    def test_json_roundtrip(self):
        nm = get_preset("ibm-like")
        assert NoiseModel.from_dict(nm.to_dict()) == nm


class TestTrajectoryBasics:
    def test_born_rule(self):
        c = Circuit(1, 1, (h(0), measure(0, 0)))
        cnt = sample_counts(c, None, 10_000, seed=3)
        assert _within(cnt.counts.get("1", 0) / 1e4, 0.5, 10_000)

    def test_readout_confusion(self):
        c = Circuit(1, 1, (x(0), measure(0, 0)))
        cnt = sample_counts(c, NoiseModel(eps01=0.2), 10_000, seed=1)
        assert _within(cnt.counts.get("0", 0) / 1e4, 0.2, 10_000)

    def test_zero_shots(self):
        cnt = sample_counts(Circuit(1, 1, (measure(0, 0),)), None, 0)
        assert cnt.n_shots == 0 and cnt.counts == {}

    def test_same_seed_same_counts(self):
        c = build_unitary_ed_cnot(TeleportSpec(5, True))
        nm = get_preset("ibm-like")
        assert sample_counts(c, nm, 500, 9) == sample_counts(c, nm, 500, 9)

    def test_shot_i_equals_run_shot(self):
        c = build_unitary_ed_cnot(TeleportSpec(4, True))
        nm = get_preset("ibm-like")
        rec = run_shots(c, nm, 40 + np.arange(30))
        for i in range(30):
            assert tuple(rec[i]) == run_shot(c, nm, 40 + i)

    def test_order_independent(self):
        c = build_unitary_ed_cnot(TeleportSpec(4, True))
        nm = get_preset("bitflip")
        seeds = np.arange(200)
        perm = np.random.default_rng(0).permutation(200)
        a = run_shots(c, nm, seeds)
        b = run_shots(c, nm, seeds[perm])
        assert np.array_equal(a[perm], b)

    def test_worker_count_irrelevant(self):
        c = build_unitary_ed_cnot(TeleportSpec(4))
        jobs = [(c, get_preset("bitflip"), 200, s) for s in (0, 1000)]
        assert sample_many(jobs, workers=1) == sample_many(jobs, workers=2)

    def test_ghz10_noiseless_only_corners(self):
        ghz = measure_data(build_ghz(GhzSpec(flagged_chain(10, []), tuple(range(10)), 4)))
        cnt = sample_counts(ghz, None, 10_000, 0)
        assert set(cnt.counts) <= {"0" * 10, "1" * 10}

    @pytest.mark.parametrize("seed", range(5))
    def test_terminal_fast_path_matches_collapse(self, seed):
        rng = np.random.default_rng(seed)
        n = 5
        ops = []
        for _ in range(12):
            if rng.random() < 0.5:
                ops.append(Op(str(rng.choice(["H", "S", "Y", "X"])), (int(rng.integers(n)),)))
            else:
                a, b = rng.choice(n, 2, replace=False)
                ops.append(cnot(int(a), int(b)))
        qs = [int(q) for q in rng.permutation(n)[:4]]
        ops += [measure(q, k) for k, q in enumerate(qs)]
        c = Circuit(n, 4, tuple(ops))
        prog = compile_circuit(c, NoiseModel(eps01=0.1, eps10=0.05))
        split = _terminal_split(prog)
        assert split is not None
        seeds = np.arange(2000) + 7 * seed
        assert np.array_equal(_run_terminal(prog, split, seeds), _run_batch(prog, seeds))

    def test_qubit_limit(self):
        with pytest.raises(SimulationLimitError):
            run_shots(Circuit(25, 0, (h(0),)), None, [0])

    @given(st.integers(0, 2), st.floats(-np.pi, np.pi), st.floats(-np.pi, np.pi))
    def test_kernel_preserves_norm(self, axis, a, b):
        rng = np.random.default_rng(0)
        psi = rng.normal(size=(2, 2, 2)) + 1j * rng.normal(size=(2, 2, 2))
        psi /= np.linalg.norm(psi)
        u = np.array([[np.cos(a), -np.exp(1j * b) * np.sin(a)], [np.exp(-1j * b) * np.sin(a), np.cos(a)]])
        apply_1q(psi, axis, u)
        assert abs(np.linalg.norm(psi) - 1) < 1e-10


class TestCounts:
    def test_tallies_must_sum(self):
        with pytest.raises(ValueError):
            Counts({"0": 3}, 4)

    def test_json_roundtrip(self):
        c = Counts({"01": 3, "10": 1}, 4, [0, 1], ["data", "flag"])
        assert Counts.from_dict(c.to_dict()) == c

    def test_marginal(self):
        c = Counts({"01": 3, "11": 1}, 4)
        assert c.marginal([1]).counts == {"1": 4}


class TestExactOracle:
    def test_identity_on_zero(self):
        rho = exact_channel(Circuit(1, 0, (h(0), h(0))), None, keep=[0])
        assert np.allclose(rho, [[1, 0], [0, 0]])

    def test_full_idle_damping(self):
        c = Circuit(2, 0, (x(0), cnot(0, 1)))
        rho = exact_channel(c, NoiseModel(gamma_idle=1.0), keep=[0])
        assert np.allclose(rho, [[1, 0], [0, 0]])

    def test_density_limit(self):
        c = Circuit(12, 0, tuple(cnot(i, i + 1) for i in range(11)))
        with pytest.raises(OracleLimitError):
            run_exact(c, NoiseModel(p2=0.01))

    @pytest.mark.parametrize("circ", [
        build_unitary_ed_cnot(TeleportSpec(5, True)),
        build_measurement_based_cnot(TeleportSpec(5, variant="mb")),
        build_measurement_based_cnot(TeleportSpec(6, variant="mb"), merged=False),
        build_fanout(FanoutSpec(0, (3, 5), tuple(range(7)))),
        measure_data(build_ghz(GhzSpec(flagged_chain(6, [(1, 2)]), tuple(range(6)), 2, (FlagPlacement(6, (1, 2)),)))),
    ])
    def test_matches_dense_reference(self, circ):
        pre = Circuit(circ.n_qubits, circ.n_bits, (h(0),) + circ.ops)  # non-trivial input on qubit 0
        ref = dense_distribution(pre)
        got = exact_distribution(pre)
        assert set(ref) == set(got)
        for k in ref:
            assert got[k] == pytest.approx(ref[k], abs=1e-10)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.tuples(st.sampled_from(["H", "S", "X", "CNOT", "M", "CX", "CZ"]),
                              st.integers(0, 3), st.integers(0, 3)), max_size=16))
    def test_random_circuits_match_dense_reference(self, spec):
        ops, nb = [], 0
        for kind, a, b in spec:
            if kind == "CNOT":
                if a != b:
                    ops.append(cnot(a, b))
            elif kind == "M":
                ops.append(measure(a, nb, basis="XYZ"[b % 3]))
                nb += 1
            elif kind in ("CX", "CZ"):
                if nb:
                    ops.append(Op("COND_" + kind[1], (a,), (b % nb,)))
            else:
                ops.append(Op(kind, (a,)))
        c = Circuit(4, nb, tuple(ops))
        ref, got = dense_distribution(c), exact_distribution(c)
        assert set(ref) == set(got)
        assert all(abs(got[k] - ref[k]) < 1e-10 for k in ref)


NOISE_GRID = [
    get_preset("bitflip"),
    get_preset("dephasing"),
    get_preset("ibm-like"),
    get_preset("suppression-off"),
    NoiseModel(p1=0.02, p2=0.05, gamma_meas=0.05, eps01=0.05, eps10=0.02),
]


@pytest.mark.parametrize("noise", NOISE_GRID, ids=lambda m: m.name)
@pytest.mark.parametrize("builder", [
    lambda: build_unitary_ed_cnot(TeleportSpec(4, True)),
    lambda: build_measurement_based_cnot(TeleportSpec(5, variant="mb")),
], ids=["ued4", "mb5"])
def test_trajectories_match_oracle(noise, builder):
    c = builder()
    pre = Circuit(c.n_qubits, c.n_bits, (h(c.metadata["control"]),) + c.ops)
    exact = exact_distribution(pre, noise)
    shots = 20_000
    cnt = sample_counts(pre, noise, shots, seed=11)
    for k, p in exact.items():
        if p > 1e-3:
            assert _within(cnt.counts.get(k, 0) / shots, p, shots), k
    for b in range(pre.n_bits):
        p = sum(v for k, v in exact.items() if k[b] == "1")
        p_hat = sum(v for k, v in cnt.counts.items() if k[b] == "1") / shots
        assert _within(p_hat, p, shots)


def test_reset_trajectory_matches_oracle():
    c = Circuit(2, 2, (h(0), cnot(0, 1), Op("RESET", (0,)), h(0), cnot(0, 1), measure(0, 0), measure(1, 1)))
    noise = NoiseModel(p2=0.05, gamma_idle=0.1)
    exact = exact_distribution(c, noise)
    cnt = sample_counts(c, noise, 20_000, 2)
    for k, p in exact.items():
        assert _within(cnt.counts.get(k, 0) / 20_000, p, 20_000)


def test_ghz_parity_observable_matches_oracle():
    ghz = measure_data(build_ghz(GhzSpec(flagged_chain(4, []), tuple(range(4)), 1)))
    noise = NoiseModel(p2=0.02)
    exact = exact_distribution(ghz, noise)
    zz = sum(p * (-1) ** k.count("1") for k, p in exact.items())
    cnt = sample_counts(ghz, noise, 20_000, 5)
    vals = np.array([(-1) ** k.count("1") for k, v in cnt.counts.items() for _ in range(v)])
    assert abs(vals.mean() - zz) <= 5 * vals.std() / np.sqrt(vals.size)


def _cnot_fidelity(c, noise, postselect=False):
    q = [c.metadata["control"], c.metadata["target"]]
    fb = c.metadata["flag_bits"]
    acc = (lambda r: all(r[b] == "0" for b in fb)) if postselect else None
    lam, p = logical_channel(c, q, noise, accept=acc)
    return process_fidelity_from_superop(lam / p)


def test_infidelity_monotone_in_p2():
    c = build_unitary_ed_cnot(TeleportSpec(6))
    f = [_cnot_fidelity(c, NoiseModel(p2=p)) for p in (0, 0.005, 0.01, 0.02)]
    assert all(a >= b for a, b in zip(f, f[1:]))


@pytest.mark.slow
@pytest.mark.parametrize("n", [3, 4, 5, 6, 7, 8])
def test_postselection_helps_under_bitflip(n):
    c = build_unitary_ed_cnot(TeleportSpec(n, True))
    noise = NoiseModel(p2=0.01, pauli="bitflip")
    assert _cnot_fidelity(c, noise, True) >= _cnot_fidelity(c, noise, False) - 1e-12
