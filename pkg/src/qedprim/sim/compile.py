"""Lower a circuit plus noise model to a flat instruction list.

Both engines interpret the same list, so the trajectory sampler and the
exact oracle see identical noise placement.  Every random site receives
fixed draw indices, which keeps per-shot random streams aligned across a
batch no matter which branches individual shots take.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..circuit import Circuit, layer_of_ops
from .kernels import MATRICES, rz_matrix
from .noise import PAULI_SETS, NoiseModel


@dataclass(frozen=True)
class Gate1:
    q: int
    u: np.ndarray


@dataclass(frozen=True)
class CX:
    c: int
    t: int


@dataclass(frozen=True)
class PauliChannel:
    qubits: tuple[int, ...]
    p: float
    paulis: tuple[str, ...]
    draw: int  # uses draw and draw + 1


@dataclass(frozen=True)
class Damp:
    q: int
    gamma: float
    draw: int


@dataclass(frozen=True)
class Meas:
    q: int
    bit: int
    eps01: float
    eps10: float
    draw: int  # uses draw and draw + 1


@dataclass(frozen=True)
class Reset:
    q: int
    draw: int


@dataclass(frozen=True)
class Cond:
    q: int
    bits: tuple[int, ...]
    u: np.ndarray
    noise: PauliChannel | None


@dataclass
class Program:
    n_qubits: int
    n_bits: int
    instrs: list
    n_draws: int


_BASIS_CHANGE = {"Z": (), "X": ("H",), "Y": ("Sdg", "H")}


def compile_circuit(circuit: Circuit, noise: NoiseModel | None = None) -> Program:
    noise = noise or NoiseModel()
    p1_set, p2_set = PAULI_SETS[noise.pauli]
    theta = noise.effective_coherent_z
    layers = layer_of_ops(circuit)
    level = [0] * circuit.n_qubits
    out: list = []
    draws = 0

    def new_draws(k):
        nonlocal draws
        d = draws
        draws += k
        return d

    def gate1(q, u):
        out.append(Gate1(q, u))
        if noise.p1 > 0:
            out.append(PauliChannel((q,), noise.p1, p1_set, new_draws(2)))

    def cx(c, t):
        out.append(CX(c, t))
        if noise.p2 > 0:
            out.append(PauliChannel((c, t), noise.p2, p2_set, new_draws(2)))
        if theta != 0.0:
            out.append(Gate1(t, rz_matrix(theta)))

    def idle(q, lay):
        k = lay - level[q]
        if k > 0 and noise.gamma_idle > 0:
            out.append(Damp(q, 1.0 - (1.0 - noise.gamma_idle) ** k, new_draws(1)))
        level[q] = max(level[q], lay)

    for op, lay in zip(circuit.ops, layers):
        kind = op.kind
        if kind == "CNOT" or kind == "SWAP":
            a, b = op.qubits
            idle(a, lay)
            idle(b, lay)
            if kind == "CNOT":
                cx(a, b)
            else:
                cx(a, b)
                cx(b, a)
                cx(a, b)
        elif kind == "RZ":
            gate1(op.qubits[0], rz_matrix(op.angle))
        elif kind in MATRICES:
            gate1(op.qubits[0], MATRICES[kind])
        elif kind == "MEASURE":
            q = op.qubits[0]
            for g in _BASIS_CHANGE[op.basis]:
                gate1(q, MATRICES[g])
            if noise.gamma_meas > 0:
                out.append(Damp(q, noise.gamma_meas, new_draws(1)))
            out.append(Meas(q, op.bits[0], noise.eps01, noise.eps10, new_draws(2)))
        elif kind == "RESET":
            out.append(Reset(op.qubits[0], new_draws(1)))
        else:
            u = MATRICES["X"] if kind == "COND_X" else MATRICES["Z"]
            ch = None
            if noise.p1 > 0:
                ch = PauliChannel(op.qubits, noise.p1, p1_set, new_draws(2))
            out.append(Cond(op.qubits[0], op.bits, u, ch))
    return Program(circuit.n_qubits, circuit.n_bits, out, draws)


def instr_qubits(ins) -> tuple[int, ...]:
    if isinstance(ins, CX):
        return (ins.c, ins.t)
    if isinstance(ins, PauliChannel):
        return ins.qubits
    return (ins.q,)
