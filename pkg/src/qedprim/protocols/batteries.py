"""Measurement batteries: MQC phase sweep, Pauli-term certification, Bell tomography."""
from __future__ import annotations

from dataclasses import dataclass

from ..circuit import Circuit, Op, h, inverse_op, rz, s, x
from ..metrics import TOMOGRAPHY_BASES, PauliTerm, cnot_terms, nyquist_phases
from .ghz import ghz_data_prep, measure_data


def _with_final_measurements(circ: Circuit, extra: list[Op], qubits, bases, role: str) -> Circuit:
    """Append ``extra`` ops then measure ``qubits`` into fresh bits after the existing ones."""
    n0 = circ.n_bits
    meas = [Op("MEASURE", (q,), (n0 + k,), basis=b) for k, (q, b) in enumerate(zip(qubits, bases))]
    meta = dict(circ.metadata)
    roles = dict(meta.get("bit_roles", {}))
    roles.update({n0 + k: role for k in range(len(meas))})
    meta["bit_roles"] = roles
    meta[f"{role}_bits"] = list(range(n0, n0 + len(meas)))
    return Circuit(circ.n_qubits, n0 + len(meas), circ.ops + tuple(extra) + tuple(meas), meta)


# -- MQC ---------------------------------------------------------------------


@dataclass(frozen=True)
class MqcBattery:
    n: int
    phases: tuple[float, ...]
    coherence: tuple[Circuit, ...]
    population: Circuit

    @property
    def circuits(self) -> list[Circuit]:
        return list(self.coherence) + [self.population]


def build_mqc_battery(ghz: Circuit) -> MqcBattery:
    """2n+2 phase-sweep circuits and one population circuit for a GHZ preparation."""
    data_q = list(ghz.metadata["data_qubits"])
    n = len(data_q)
    undo = [inverse_op(op) for op in reversed(ghz_data_prep(ghz))]
    phases = tuple(float(p) for p in nyquist_phases(n))
    coh = []
    for k, phi in enumerate(phases):
        c = _with_final_measurements(ghz, [rz(q, phi) for q in data_q] + undo, data_q, "Z" * n, "data")
        coh.append(c.with_metadata(mqc_phase=phi, mqc_index=k))
    return MqcBattery(n, phases, tuple(coh), measure_data(ghz))


# -- process certification ------------------------------------------------------


def _prep_conjugate_eigenstate(q: int, label: str, negative: bool) -> list[Op]:
    """Eigenstate of the complex-conjugated Pauli ``label`` with eigenvalue -1 if ``negative``.

    Identity factors get a Z-basis state; its sign carries no weight.
    """
    if label in "IZ":
        return [x(q)] if negative else []
    if label == "X":
        return ([x(q)] if negative else []) + [h(q)]
    # conj(Y) = -Y: the -1 eigenstate of conj(Y) is the +1 eigenstate of Y
    return ([] if negative else [x(q)]) + [h(q), s(q)]


@dataclass(frozen=True)
class CertificationTerm:
    term: PauliTerm
    circuits: tuple[Circuit, ...]  # indexed by draw = neg_control + 2 * neg_target
    out_bits: tuple[int, int]

    def weight(self, draw: int) -> int:
        w = 1
        for pos, label in enumerate(self.term.p_in):
            if label != "I" and (draw >> pos) & 1:
                w = -w
        return w

    def parity_positions(self) -> list[int]:
        return [b for b, label in zip(self.out_bits, self.term.p_out) if label != "I"]


def build_certification_battery(protocol: Circuit, terms=None) -> list[CertificationTerm]:
    """One term per non-vanishing Pauli pair; four sign-draw variants each."""
    control = protocol.metadata["control"]
    target = protocol.metadata["target"]
    out = []
    for term in terms or cnot_terms():
        circs = []
        for draw in range(4):
            prep = (_prep_conjugate_eigenstate(control, term.p_in[0], bool(draw & 1))
                    + _prep_conjugate_eigenstate(target, term.p_in[1], bool(draw & 2)))
            body = Circuit(protocol.n_qubits, protocol.n_bits, tuple(prep) + protocol.ops, dict(protocol.metadata))
            bases = [("Z" if p == "I" else p) for p in term.p_out]
            c = _with_final_measurements(body, [], [control, target], bases, "output")
            circs.append(c.with_metadata(cert_term=[term.p_in, term.p_out, term.sign], sign_draw=draw))
        n0 = protocol.n_bits
        out.append(CertificationTerm(term, tuple(circs), (n0, n0 + 1)))
    return out


# -- Bell-pair tomography ------------------------------------------------------


def bell_from_cnot(protocol: Circuit) -> Circuit:
    """Prepend H on the control so the CNOT outputs a Bell pair on (control, target)."""
    ctl = protocol.metadata["control"]
    meta = dict(protocol.metadata)
    meta["pair"] = [ctl, protocol.metadata["target"]]
    return Circuit(protocol.n_qubits, protocol.n_bits, (h(ctl),) + protocol.ops, meta)


def build_tomography_battery(bell: Circuit, pair=None) -> dict[str, Circuit]:
    """Nine circuits measuring the pair in every product of X, Y, Z bases."""
    a, b = pair if pair is not None else bell.metadata["pair"]
    return {basis: _with_final_measurements(bell, [], [a, b], basis, "output").with_metadata(tomo_basis=basis)
            for basis in TOMOGRAPHY_BASES}
