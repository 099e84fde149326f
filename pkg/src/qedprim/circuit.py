"""Circuit intermediate representation.

A :class:`Circuit` is an ordered program of gates, mid-circuit
measurements and parity-conditioned Pauli corrections over ``n_qubits``
qubits and ``n_bits`` classical bits.  Circuits are frozen once built;
:meth:`Circuit.append` returns a new circuit.

Bit strings produced anywhere in this package print bit 0 as the
leftmost character.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

ONE_QUBIT = ("H", "X", "Y", "Z", "S", "Sdg", "RZ")
TWO_QUBIT = ("CNOT", "SWAP")
CONDITIONAL = ("COND_X", "COND_Z")
KINDS = ONE_QUBIT + TWO_QUBIT + CONDITIONAL + ("MEASURE", "RESET")
BASES = ("X", "Y", "Z")


class CircuitError(ValueError):
    """Raised for malformed operations or circuits."""


@dataclass(frozen=True)
class Op:
    """One instruction.

    ``qubits`` holds the acted-on qubits (control first for CNOT).  For
    MEASURE, ``bits`` is the single written bit; for COND_X/COND_Z it is the
    parity set that is read.  ``optional`` tags error-detection measurements.
    """

    kind: str
    qubits: tuple[int, ...]
    bits: tuple[int, ...] = ()
    angle: float = 0.0
    basis: str = "Z"
    optional: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise CircuitError(f"unknown op kind {self.kind!r}")
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "bits", tuple(int(b) for b in self.bits))
        nq = 2 if self.kind in TWO_QUBIT else 1
        if len(self.qubits) != nq:
            raise CircuitError(f"{self.kind} takes {nq} qubit(s), got {self.qubits}")
        if nq == 2 and self.qubits[0] == self.qubits[1]:
            raise CircuitError("distinct qubits required")
        if self.kind == "MEASURE":
            if len(self.bits) != 1:
                raise CircuitError("MEASURE writes exactly one bit")
            if self.basis not in BASES:
                raise CircuitError(f"unknown measurement basis {self.basis!r}")
        elif self.kind in CONDITIONAL:
            if not self.bits:
                raise CircuitError("conditional parity set must be non-empty")
            if len(set(self.bits)) != len(self.bits):
                raise CircuitError("conditional parity set has repeated bits")
        elif self.bits:
            raise CircuitError(f"{self.kind} does not touch classical bits")
        if not np.isfinite(self.angle):
            raise CircuitError("angle must be finite")

    @property
    def is_unitary(self) -> bool:
        return self.kind in ONE_QUBIT or self.kind in TWO_QUBIT

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind, "qubits": list(self.qubits)}
        if self.bits:
            d["bits"] = list(self.bits)
        if self.kind == "RZ":
            d["angle"] = self.angle
        if self.kind == "MEASURE":
            d["basis"] = self.basis
            d["optional"] = self.optional
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Op":
        return cls(
            d["kind"],
            tuple(d["qubits"]),
            tuple(d.get("bits", ())),
            float(d.get("angle", 0.0)),
            d.get("basis", "Z"),
            bool(d.get("optional", False)),
        )


# constructors used throughout the builders
def h(q): return Op("H", (q,))
def x(q): return Op("X", (q,))
def y(q): return Op("Y", (q,))
def z(q): return Op("Z", (q,))
def s(q): return Op("S", (q,))
def sdg(q): return Op("Sdg", (q,))
def rz(q, angle): return Op("RZ", (q,), angle=float(angle))
def cnot(c, t): return Op("CNOT", (c, t))
def swap(a, b): return Op("SWAP", (a, b))
def reset(q): return Op("RESET", (q,))
def cond_x(q, bits): return Op("COND_X", (q,), tuple(sorted(bits)))
def cond_z(q, bits): return Op("COND_Z", (q,), tuple(sorted(bits)))


def measure(q, bit, basis="Z", optional=False):
    return Op("MEASURE", (q,), (bit,), basis=basis, optional=optional)


@dataclass(frozen=True)
class CircuitStats:
    two_qubit_depth: int = 0
    n_cnot: int = 0
    n_swap: int = 0
    n_measure: int = 0
    n_measure_optional: int = 0

    @property
    def n_measure_mandatory(self) -> int:
        return self.n_measure - self.n_measure_optional


def _check_op(op: Op, n_qubits: int, n_bits: int, written: set[int]) -> None:
    for q in op.qubits:
        if not 0 <= q < n_qubits:
            raise CircuitError(f"qubit {q} out of range for {n_qubits} qubits")
    for b in op.bits:
        if not 0 <= b < n_bits:
            raise CircuitError(f"bit {b} out of range for {n_bits} bits")
    if op.kind == "MEASURE":
        if op.bits[0] in written:
            raise CircuitError(f"bit {op.bits[0]} already written")
    elif op.kind in CONDITIONAL:
        missing = [b for b in op.bits if b not in written]
        if missing:
            raise CircuitError(f"unwritten bit(s) {missing} read by {op.kind}")


@dataclass(frozen=True)
class Circuit:
    """Immutable, validated program.

    ``metadata`` is free-form JSON-able data; builders use the keys
    ``roles`` (qubit -> role label), ``bit_roles`` (bit -> role label),
    ``control``/``target`` and step boundaries.
    """

    n_qubits: int
    n_bits: int = 0
    ops: tuple[Op, ...] = ()
    metadata: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        if self.n_qubits < 0 or self.n_bits < 0:
            raise CircuitError("negative register size")
        written: set[int] = set()
        for op in self.ops:
            _check_op(op, self.n_qubits, self.n_bits, written)
            if op.kind == "MEASURE":
                written.add(op.bits[0])

    def __len__(self) -> int:
        return len(self.ops)

    def __iter__(self):
        return iter(self.ops)

    def written_bits(self) -> set[int]:
        return {op.bits[0] for op in self.ops if op.kind == "MEASURE"}

    def append(self, op: Op) -> "Circuit":
        _check_op(op, self.n_qubits, self.n_bits, self.written_bits())
        return Circuit(self.n_qubits, self.n_bits, self.ops + (op,), dict(self.metadata))

    def extend(self, ops: Iterable[Op]) -> "Circuit":
        return Circuit(self.n_qubits, self.n_bits, self.ops + tuple(ops), dict(self.metadata))

    def with_registers(self, n_qubits: int | None = None, n_bits: int | None = None) -> "Circuit":
        return Circuit(
            self.n_qubits if n_qubits is None else n_qubits,
            self.n_bits if n_bits is None else n_bits,
            self.ops,
            dict(self.metadata),
        )

    def with_metadata(self, **kw) -> "Circuit":
        meta = dict(self.metadata)
        meta.update(kw)
        return Circuit(self.n_qubits, self.n_bits, self.ops, meta)

    @property
    def is_unitary(self) -> bool:
        return all(op.is_unitary for op in self.ops)

    def stats(self) -> CircuitStats:
        return stats(self)

    # -- serialization -------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        return {
            "n_qubits": self.n_qubits,
            "n_bits": self.n_bits,
            "ops": [op.to_dict() for op in self.ops],
            "metadata": _jsonable(self.metadata),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Circuit":
        return cls(
            int(d["n_qubits"]),
            int(d["n_bits"]),
            tuple(Op.from_dict(o) for o in d["ops"]),
            _restore_metadata(d.get("metadata", {})),
        )

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        return cls.from_dict(json.loads(text))

    def fingerprint(self) -> str:
        """Short content hash over registers and ops (metadata excluded)."""
        body = json.dumps([self.n_qubits, self.n_bits, [o.to_dict() for o in self.ops]], sort_keys=True)
        return hashlib.sha256(body.encode()).hexdigest()[:16]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


# metadata maps keyed by qubit/bit index come back from JSON with str keys
_INT_KEYED = ("roles", "bit_roles", "nodes_of", "final_location")


def _restore_metadata(meta: dict) -> dict:
    out = dict(meta)
    for key in _INT_KEYED:
        if isinstance(out.get(key), dict):
            out[key] = {int(k) if str(k).lstrip("-").isdigit() else k: v for k, v in out[key].items()}
    return out


def layer_of_ops(circuit: Circuit) -> list[int]:
    """Greedy left-aligned two-qubit layer index for every op.

    Two-qubit gates go in the layer after the latest two-qubit gate on
    either qubit; all other ops inherit the current layer of their qubit
    and add no depth.
    """
    level = [0] * circuit.n_qubits
    layers = []
    for op in circuit.ops:
        if op.kind in TWO_QUBIT:
            a, b = op.qubits
            lay = max(level[a], level[b]) + 1
            level[a] = level[b] = lay
        else:
            lay = level[op.qubits[0]]
        layers.append(lay)
    return layers


def stats(circuit: Circuit) -> CircuitStats:
    layers = layer_of_ops(circuit)
    depth = 0
    n_cnot = n_swap = n_meas = n_opt = 0
    for op, lay in zip(circuit.ops, layers):
        if op.kind == "CNOT":
            n_cnot += 1
            depth = max(depth, lay)
        elif op.kind == "SWAP":
            n_swap += 1
            depth = max(depth, lay)
        elif op.kind == "MEASURE":
            n_meas += 1
            n_opt += op.optional
    return CircuitStats(depth, n_cnot, n_swap, n_meas, n_opt)


_INVERSE = {"H": "H", "X": "X", "Y": "Y", "Z": "Z", "S": "Sdg", "Sdg": "S", "CNOT": "CNOT", "SWAP": "SWAP"}


def inverse_op(op: Op) -> Op:
    if op.kind == "RZ":
        return Op("RZ", op.qubits, angle=-op.angle)
    if op.kind not in _INVERSE:
        raise CircuitError(f"{op.kind} is not unitary")
    return Op(_INVERSE[op.kind], op.qubits)


def inverse_unitary(circuit: Circuit) -> Circuit:
    """Reverse a measurement-free circuit, inverting every gate."""
    bad = [op.kind for op in circuit.ops if not op.is_unitary]
    if bad:
        raise CircuitError(f"non-unitary op(s) present: {sorted(set(bad))}")
    ops = tuple(inverse_op(op) for op in reversed(circuit.ops))
    return Circuit(circuit.n_qubits, circuit.n_bits, ops, dict(circuit.metadata))


def remap(ops: Sequence[Op], qubit_map: dict[int, int]) -> list[Op]:
    """Relabel qubits of ``ops``; unmapped qubits keep their index."""
    out = []
    for op in ops:
        qs = tuple(qubit_map.get(q, q) for q in op.qubits)
        out.append(Op(op.kind, qs, op.bits, op.angle, op.basis, op.optional))
    return out


def strip_feedforward(circuit: Circuit) -> tuple[Circuit, list[tuple[int, ...]]]:
    """Drop every COND op and return the parity sets they read.

    Post-selecting the stripped circuit on all returned parities being even
    keeps exactly the shots that needed no correction.
    """
    ops = [op for op in circuit.ops if op.kind not in CONDITIONAL]
    parities = [op.bits for op in circuit.ops if op.kind in CONDITIONAL]
    meta = dict(circuit.metadata)
    meta["stripped_parities"] = [list(p) for p in parities]
    return Circuit(circuit.n_qubits, circuit.n_bits, ops, meta), parities


def insert_op(circuit: Circuit, index: int, op: Op) -> Circuit:
    """Return a copy with ``op`` inserted before position ``index``."""
    ops = circuit.ops[:index] + (op,) + circuit.ops[index:]
    return Circuit(circuit.n_qubits, circuit.n_bits, ops, dict(circuit.metadata))
