"""Small mutable helper for assembling circuits with role bookkeeping."""
from __future__ import annotations

from ..circuit import Circuit, Op, measure


class Builder:
    def __init__(self, n_qubits: int):
        self.n_qubits = n_qubits
        self.ops: list[Op] = []
        self.n_bits = 0
        self.roles: dict[int, str] = {}
        self.bit_roles: dict[int, str] = {}
        self.marks: dict[str, list[int]] = {}

    def add(self, *ops: Op) -> None:
        self.ops.extend(ops)

    def measure(self, q: int, role: str, basis: str = "Z", optional: bool = False) -> int:
        bit = self.n_bits
        self.n_bits += 1
        self.ops.append(measure(q, bit, basis, optional))
        self.bit_roles[bit] = role
        return bit

    def mark(self, name: str) -> None:
        """Record the current op index under ``name`` (start/end of a step)."""
        self.marks.setdefault(name, []).append(len(self.ops))

    def circuit(self, **meta) -> Circuit:
        meta.setdefault("roles", dict(self.roles))
        meta.setdefault("bit_roles", dict(self.bit_roles))
        meta.setdefault("steps", {k: list(v) for k, v in self.marks.items()})
        return Circuit(self.n_qubits, self.n_bits, tuple(self.ops), meta)
