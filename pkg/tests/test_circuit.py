import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import distribution, simulate
from qedprim import Circuit, CircuitError, Op
from qedprim.circuit import (
    cnot,
    cond_z,
    h,
    insert_op,
    inverse_unitary,
    layer_of_ops,
    measure,
    rz,
    s,
    sdg,
    strip_feedforward,
)
from qedprim.protocols import TeleportSpec, build_measurement_based_cnot, build_unitary_ed_cnot
from qedprim.qasm import export_qasm, import_qasm


class TestOpValidation:
    def test_unknown_kind(self):
        with pytest.raises(CircuitError):
            Op("CZ", (0, 1))

    def test_arity(self):
        with pytest.raises(CircuitError):
            Op("CNOT", (0,))
        with pytest.raises(CircuitError):
            Op("H", (0, 1))

    def test_cnot_distinct_qubits(self):
        with pytest.raises(CircuitError):
            cnot(1, 1)

    def test_measure_needs_one_bit(self):
        with pytest.raises(CircuitError):
            Op("MEASURE", (0,), (0, 1))

    def test_bad_basis(self):
        with pytest.raises(CircuitError):
            measure(0, 0, basis="W")

    def test_conditional_needs_parity_bits(self):
        with pytest.raises(CircuitError):
            Op("COND_X", (0,), ())

    def test_non_finite_angle(self):
        with pytest.raises(CircuitError):
            rz(0, float("nan"))


class TestCircuitValidation:
    def test_qubit_out_of_range(self):
        with pytest.raises(CircuitError):
            Circuit(2, 0, (cnot(0, 2),))

    def test_bit_written_twice(self):
        with pytest.raises(CircuitError):
            Circuit(1, 1, (measure(0, 0), measure(0, 0)))

    def test_conditional_reads_unwritten_bit(self):
        with pytest.raises(CircuitError):
            Circuit(2, 1, (cond_z(1, [0]),))

    def test_append_returns_new_circuit(self):
        c = Circuit(2)
        c2 = c.append(h(0))
        assert len(c) == 0 and len(c2) == 1


class TestStats:
    def test_empty(self):
        st_ = Circuit(3).stats()
        assert (st_.two_qubit_depth, st_.n_cnot, st_.n_measure) == (0, 0, 0)

    def test_ued_n6(self):
        st_ = build_unitary_ed_cnot(TeleportSpec(6)).stats()
        assert (st_.n_cnot, st_.n_measure, st_.two_qubit_depth) == (10, 3, 5)

    def test_mb_n6(self):
        st_ = build_measurement_based_cnot(TeleportSpec(6, variant="mb")).stats()
        assert (st_.n_cnot, st_.n_measure, st_.two_qubit_depth) == (7, 6, 2)

    def test_single_qubit_ops_add_no_depth(self):
        c = Circuit(2, 1, (h(0), cnot(0, 1), h(1), s(1), measure(1, 0), cnot(0, 1)))
        assert c.stats().two_qubit_depth == 2

    def test_layering_preserves_dependencies(self):
        # executing ops grouped by layer (stable order within a layer) gives the same state
        rng = np.random.default_rng(5)
        for _ in range(20):
            ops = []
            for _ in range(15):
                if rng.random() < 0.5:
                    a, b = rng.choice(5, 2, replace=False)
                    ops.append(cnot(int(a), int(b)))
                else:
                    ops.append(Op(["H", "S", "X"][rng.integers(3)], (int(rng.integers(5)),)))
            c = Circuit(5, 0, tuple(ops))
            layers = layer_of_ops(c)
            order = sorted(range(len(ops)), key=lambda i: (layers[i], i))
            c2 = Circuit(5, 0, tuple(ops[i] for i in order))
            v1 = next(iter(simulate(c).values()))
            v2 = next(iter(simulate(c2).values()))
            assert np.allclose(v1, v2)


class TestInverse:
    def test_self_inverse_order(self):
        c = Circuit(2, 0, (h(0), cnot(0, 1)))
        assert inverse_unitary(c).ops == (cnot(0, 1), h(0))

    def test_s_to_sdg(self):
        assert inverse_unitary(Circuit(1, 0, (s(0),))).ops == (sdg(0),)

    def test_rz_negated(self):
        assert inverse_unitary(Circuit(1, 0, (rz(0, 0.3),))).ops[0].angle == -0.3

    def test_rejects_measurement(self):
        with pytest.raises(CircuitError):
            inverse_unitary(Circuit(1, 1, (measure(0, 0),)))

    def test_compose_returns_zero_state(self):
        c = Circuit(3, 0, (h(0), cnot(0, 1), s(1), rz(2, 0.7), cnot(1, 2), sdg(0)))
        full = c.extend(inverse_unitary(c).ops).with_registers(n_bits=3)
        full = full.extend(measure(q, q) for q in range(3))
        assert distribution(full) == pytest.approx({"000": 1.0})

    @given(st.lists(st.tuples(st.sampled_from(["H", "S", "Sdg", "X", "CNOT", "RZ"]),
                              st.integers(0, 3), st.integers(0, 3)), max_size=20))
    def test_involution(self, spec):
        ops = []
        for kind, a, b in spec:
            if kind == "CNOT":
                if a != b:
                    ops.append(cnot(a, b))
            elif kind == "RZ":
                ops.append(rz(a, 0.1 * (b + 1)))
            else:
                ops.append(Op(kind, (a,)))
        c = Circuit(4, 0, tuple(ops))
        assert inverse_unitary(inverse_unitary(c)).ops == c.ops


class TestFeedforwardHelpers:
    def test_strip_returns_parities(self):
        c = build_unitary_ed_cnot(TeleportSpec(5))
        stripped, parities = strip_feedforward(c)
        assert not any(op.kind.startswith("COND") for op in stripped.ops)
        assert len(parities) == sum(op.kind.startswith("COND") for op in c.ops)

    def test_insert_op(self):
        c = Circuit(2, 0, (h(0), cnot(0, 1)))
        c2 = insert_op(c, 1, Op("X", (1,)))
        assert [op.kind for op in c2.ops] == ["H", "X", "CNOT"]


class TestSerialization:
    def test_json_roundtrip_with_metadata(self):
        c = build_unitary_ed_cnot(TeleportSpec(6, True))
        back = Circuit.from_json(c.to_json())
        assert back.ops == c.ops and back.n_bits == c.n_bits
        assert back.metadata["roles"] == c.metadata["roles"]
        assert back.metadata["bit_roles"] == c.metadata["bit_roles"]

    def test_fingerprint_ignores_metadata(self):
        c = Circuit(2, 0, (h(0),))
        assert c.fingerprint() == c.with_metadata(x=1).fingerprint()

    def test_qasm_cnot_line(self):
        assert "cx q[0], q[1];" in export_qasm(Circuit(2, 0, (cnot(0, 1),)))

    def test_qasm_conditional_parity(self):
        c = Circuit(2, 2, (measure(0, 0), measure(0, 1, basis="X"), cond_z(1, [0, 1])))
        text = export_qasm(c)
        assert "if (c[0] ^ c[1]) { z q[1]; }" in text

    @pytest.mark.parametrize("builder", [
        lambda: build_unitary_ed_cnot(TeleportSpec(6, True)),
        lambda: build_measurement_based_cnot(TeleportSpec(7, variant="mb")),
    ])
    def test_qasm_roundtrip(self, builder):
        c = builder()
        back = import_qasm(export_qasm(c))
        assert back.ops == c.ops
        assert (back.n_qubits, back.n_bits) == (c.n_qubits, c.n_bits)

    def test_qasm_rejects_unknown_gate(self):
        with pytest.raises(CircuitError):
            import_qasm("qubit[1] q;\nccx q[0];\n")


ops_strategy = st.lists(
    st.one_of(
        st.tuples(st.sampled_from(["H", "X", "Y", "Z", "S", "Sdg"]), st.integers(0, 2)),
        st.tuples(st.just("RZ"), st.integers(0, 2), st.floats(-3, 3, allow_nan=False)),
        st.tuples(st.sampled_from(["CNOT", "SWAP"]), st.integers(0, 2), st.integers(0, 2)),
    ),
    max_size=25,
)


@settings(max_examples=60)
@given(ops_strategy, st.lists(st.sampled_from("XYZ"), min_size=3, max_size=3))
def test_random_circuits_roundtrip_qasm_and_json(spec, bases):
    ops = []
    for item in spec:
        if item[0] in ("CNOT", "SWAP"):
            if item[1] != item[2]:
                ops.append(Op(item[0], (item[1], item[2])))
        elif item[0] == "RZ":
            ops.append(rz(item[1], item[2]))
        else:
            ops.append(Op(item[0], (item[1],)))
    ops += [measure(q, q, basis=b) for q, b in enumerate(bases)]
    ops.append(cond_z(0, [1, 2]))
    c = Circuit(3, 3, tuple(ops))
    assert import_qasm(export_qasm(c)).ops == c.ops
    assert Circuit.from_json(c.to_json()).ops == c.ops
