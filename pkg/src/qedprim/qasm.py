"""OpenQASM 3 export and import for the circuit gate subset.

Measurements in the X or Y basis are written as the fixed basis change
(``h`` or ``sdg; h``) followed by ``measure``; a trailing ``// @basis``
annotation lets :func:`import_qasm` fold the basis change back into one
MEASURE op.  Conditional Paulis become ``if`` statements on the XOR of
the parity bits.
"""
from __future__ import annotations

import json
import re

from .circuit import Circuit, CircuitError, Op, _restore_metadata

_GATE_NAMES = {"H": "h", "X": "x", "Y": "y", "Z": "z", "S": "s", "Sdg": "sdg", "CNOT": "cx", "SWAP": "swap"}
_FROM_NAME = {v: k for k, v in _GATE_NAMES.items()}


def export_qasm(circuit: Circuit) -> str:
    lines = ["OPENQASM 3.0;", 'include "stdgates.inc";']
    if circuit.metadata:
        lines.append("// @meta " + json.dumps(circuit.to_dict()["metadata"], sort_keys=True))
    lines.append(f"qubit[{circuit.n_qubits}] q;")
    if circuit.n_bits:
        lines.append(f"bit[{circuit.n_bits}] c;")
    for op in circuit.ops:
        lines.extend(_op_lines(op))
    return "\n".join(lines) + "\n"


def _op_lines(op: Op) -> list[str]:
    qs = ", ".join(f"q[{q}]" for q in op.qubits)
    if op.kind in _GATE_NAMES:
        return [f"{_GATE_NAMES[op.kind]} {qs};"]
    if op.kind == "RZ":
        return [f"rz({op.angle!r}) {qs};"]
    if op.kind == "RESET":
        return [f"reset {qs};"]
    if op.kind == "MEASURE":
        tag = f"// @basis {op.basis}" + (" optional" if op.optional else "")
        pre = {"Z": [], "X": ["h"], "Y": ["sdg", "h"]}[op.basis]
        out = [f"{g} {qs}; // @basis-change" for g in pre]
        out.append(f"c[{op.bits[0]}] = measure {qs}; {tag}")
        return out
    gate = "x" if op.kind == "COND_X" else "z"
    cond = " ^ ".join(f"c[{b}]" for b in op.bits)
    return [f"if ({cond}) {{ {gate} {qs}; }}"]


_IDX = re.compile(r"q\[(\d+)\]")
_BIT = re.compile(r"c\[(\d+)\]")


def import_qasm(text: str) -> Circuit:
    """Parse text written by :func:`export_qasm` (plus plain gate lines)."""
    n_qubits = n_bits = 0
    ops: list[Op] = []
    meta: dict = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith(("OPENQASM", "include")):
            continue
        if line.startswith("// @meta"):
            meta = json.loads(line[len("// @meta"):])
            continue
        if line.startswith("//"):
            continue
        if "@basis-change" in line:
            continue
        code, _, comment = line.partition("//")
        code = code.strip()
        if m := re.fullmatch(r"qubit\[(\d+)\]\s+q;", code):
            n_qubits = int(m.group(1))
        elif m := re.fullmatch(r"bit\[(\d+)\]\s+c;", code):
            n_bits = int(m.group(1))
        elif m := re.fullmatch(r"c\[(\d+)\]\s*=\s*measure\s+q\[(\d+)\];", code):
            basis, optional = "Z", False
            if tag := re.search(r"@basis\s+([XYZ])(\s+optional)?", comment):
                basis, optional = tag.group(1), bool(tag.group(2))
            ops.append(Op("MEASURE", (int(m.group(2)),), (int(m.group(1)),), basis=basis, optional=optional))
        elif m := re.fullmatch(r"if\s*\((.+)\)\s*\{\s*([xz])\s+q\[(\d+)\];\s*\}", code):
            bits = tuple(int(b) for b in _BIT.findall(m.group(1)))
            kind = "COND_X" if m.group(2) == "x" else "COND_Z"
            ops.append(Op(kind, (int(m.group(3)),), bits))
        elif m := re.fullmatch(r"rz\(([^)]+)\)\s+q\[(\d+)\];", code):
            ops.append(Op("RZ", (int(m.group(2)),), angle=float(m.group(1))))
        elif m := re.fullmatch(r"reset\s+q\[(\d+)\];", code):
            ops.append(Op("RESET", (int(m.group(1)),)))
        elif m := re.fullmatch(r"(\w+)\s+(.+);", code):
            name = m.group(1)
            if name not in _FROM_NAME:
                raise CircuitError(f"unsupported gate {name!r}")
            ops.append(Op(_FROM_NAME[name], tuple(int(i) for i in _IDX.findall(m.group(2)))))
        else:
            raise CircuitError(f"cannot parse line: {raw!r}")
    return Circuit(n_qubits, n_bits, tuple(ops), _restore_metadata(meta))
