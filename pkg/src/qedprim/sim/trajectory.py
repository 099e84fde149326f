"""Monte Carlo trajectory state-vector simulator.

Shots are simulated as a batch of kets (batch on axis 0).  Each shot's
randomness comes from :mod:`qedprim.sim.rng` keyed by its own seed, so
``sample_counts(c, noise, n, seed)`` shot ``i`` is exactly
``run_shot(c, noise, seed + i)``.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from ..circuit import Circuit
from .compile import CX, Cond, Damp, Gate1, Meas, PauliChannel, Program, Reset, compile_circuit
from .counts import Counts
from .kernels import MATRICES, apply_1q, apply_cnot, apply_pauli_string, sl
from .noise import NoiseModel
from .rng import shot_keys, uniforms

MAX_QUBITS = 24
_BATCH_ELEMENTS = 1 << 21


class SimulationLimitError(RuntimeError):
    pass


def _prob_one(state: np.ndarray, ax: int) -> np.ndarray:
    a = state[sl(state.ndim, (ax, 1))].reshape(state.shape[0], -1)
    return np.einsum("ij,ij->i", a.real, a.real) + np.einsum("ij,ij->i", a.imag, a.imag)


def _scale_rows(arr: np.ndarray, factors: np.ndarray) -> None:
    arr *= factors.reshape((-1,) + (1,) * (arr.ndim - 1))


def _pauli(state, keys, rows_mask, ch: PauliChannel):
    u = uniforms(keys, ch.draw)
    err = u < ch.p
    if rows_mask is not None:
        err &= rows_mask
    if not err.any():
        return
    which = np.minimum((uniforms(keys, ch.draw + 1) * len(ch.paulis)).astype(int), len(ch.paulis) - 1)
    axes = [q + 1 for q in ch.qubits]
    for k, ps in enumerate(ch.paulis):
        rows = np.nonzero(err & (which == k))[0]
        if rows.size:
            sub = state[rows]
            apply_pauli_string(sub, axes, ps)
            state[rows] = sub


def _run_batch(prog: Program, seeds: np.ndarray) -> np.ndarray:
    n = prog.n_qubits
    b = len(seeds)
    keys = shot_keys(seeds)
    state = np.zeros((b,) + (2,) * n, dtype=complex)
    state[(slice(None),) + (0,) * n] = 1.0
    rec = np.zeros((b, prog.n_bits), dtype=np.uint8)
    for ins in prog.instrs:
        if isinstance(ins, Gate1):
            apply_1q(state, ins.q + 1, ins.u)
        elif isinstance(ins, CX):
            apply_cnot(state, ins.c + 1, ins.t + 1)
        elif isinstance(ins, PauliChannel):
            _pauli(state, keys, None, ins)
        elif isinstance(ins, Damp):
            ax = ins.q + 1
            p1 = _prob_one(state, ax)
            jump = uniforms(keys, ins.draw) < ins.gamma * p1
            i0, i1 = sl(state.ndim, (ax, 0)), sl(state.ndim, (ax, 1))
            s0, s1 = state[i0], state[i1]
            if jump.any():
                rows = np.nonzero(jump)[0]
                s0[rows] = s1[rows] / np.sqrt(p1[rows]).reshape((-1,) + (1,) * (s1.ndim - 1))
                s1[rows] = 0.0
            keep = ~jump
            if keep.any():
                rows = np.nonzero(keep)[0]
                norm = 1.0 / np.sqrt(1.0 - ins.gamma * p1[rows])
                sub0 = s0[rows]
                sub1 = s1[rows] * np.sqrt(1.0 - ins.gamma)
                _scale_rows(sub0, norm)
                _scale_rows(sub1, norm)
                s0[rows] = sub0
                s1[rows] = sub1
        elif isinstance(ins, Meas) or isinstance(ins, Reset):
            ax = ins.q + 1
            p1 = np.clip(_prob_one(state, ax), 0.0, 1.0)
            m = uniforms(keys, ins.draw) < p1
            i0, i1 = sl(state.ndim, (ax, 0)), sl(state.ndim, (ax, 1))
            f0 = np.where(m, 0.0, 1.0 / np.sqrt(np.maximum(1.0 - p1, 1e-300)))
            f1 = np.where(m, 1.0 / np.sqrt(np.maximum(p1, 1e-300)), 0.0)
            s0, s1 = state[i0], state[i1]
            _scale_rows(s0, f0)
            _scale_rows(s1, f1)
            if isinstance(ins, Reset):
                if m.any():
                    rows = np.nonzero(m)[0]
                    sub = state[rows]
                    apply_1q(sub, ax, MATRICES["X"])
                    state[rows] = sub
            else:
                v = uniforms(keys, ins.draw + 1)
                flip = np.where(m, v < ins.eps01, v < ins.eps10)
                rec[:, ins.bit] = m ^ flip
        elif isinstance(ins, Cond):
            par = np.bitwise_xor.reduce(rec[:, list(ins.bits)], axis=1).astype(bool)
            if par.any():
                rows = np.nonzero(par)[0]
                sub = state[rows]
                apply_1q(sub, ins.q + 1, ins.u)
                state[rows] = sub
                if ins.noise is not None:
                    _pauli(state, keys, par, ins.noise)
        else:  # pragma: no cover
            raise TypeError(ins)
    return rec


def _terminal_split(prog: Program) -> int | None:
    """Index where a pure-unitary prefix meets a tail of distinct-qubit measurements."""
    k = 0
    while k < len(prog.instrs) and isinstance(prog.instrs[k], (Gate1, CX)):
        k += 1
    tail = prog.instrs[k:]
    if not all(isinstance(ins, Meas) for ins in tail) or len({ins.q for ins in tail}) != len(tail):
        return None
    return k


def _run_terminal(prog: Program, split: int, seeds: np.ndarray) -> np.ndarray:
    """One shared state, then per-shot sequential sampling from marginal tables.

    Uses the same draws and conditional-probability rule as collapse in
    ``_run_batch``, so records agree shot for shot.
    """
    n = prog.n_qubits
    state = np.zeros((1,) + (2,) * n, dtype=complex)
    state[(0,) + (0,) * n] = 1.0
    for ins in prog.instrs[:split]:
        if isinstance(ins, Gate1):
            apply_1q(state, ins.q + 1, ins.u)
        else:
            apply_cnot(state, ins.c + 1, ins.t + 1)
    tail = prog.instrs[split:]
    order = [ins.q for ins in tail]
    probs = np.abs(state[0]) ** 2
    rest = tuple(q for q in range(n) if q not in order)
    if rest:
        probs = probs.sum(axis=rest)
    kept = sorted(order)
    tables = [np.transpose(probs, [kept.index(q) for q in order]).reshape(-1)]
    for _ in order:
        tables.append(tables[-1].reshape(-1, 2).sum(axis=1))
    tables.reverse()  # tables[j] is the marginal over the first j measured qubits
    keys = shot_keys(seeds)
    rec = np.zeros((len(seeds), prog.n_bits), dtype=np.uint8)
    idx = np.zeros(len(seeds), dtype=np.int64)
    for j, ins in enumerate(tail):
        p1 = tables[j + 1][2 * idx + 1] / np.maximum(tables[j][idx], 1e-300)
        m = uniforms(keys, ins.draw) < np.clip(p1, 0.0, 1.0)
        v = uniforms(keys, ins.draw + 1)
        rec[:, ins.bit] = m ^ np.where(m, v < ins.eps01, v < ins.eps10)
        idx = 2 * idx + m
    return rec


def run_shots(circuit: Circuit, noise: NoiseModel | None, seeds, max_qubits: int = MAX_QUBITS) -> np.ndarray:
    """Classical records, one row per seed."""
    if circuit.n_qubits > max_qubits:
        raise SimulationLimitError(f"{circuit.n_qubits} qubits exceeds the simulator limit of {max_qubits}")
    seeds = np.asarray(seeds, dtype=np.int64).reshape(-1)
    prog = compile_circuit(circuit, noise)
    if seeds.size == 0:
        return np.zeros((0, circuit.n_bits), dtype=np.uint8)
    split = _terminal_split(prog)
    if split is not None:
        return _run_terminal(prog, split, seeds)
    chunk = max(1, _BATCH_ELEMENTS >> circuit.n_qubits)
    parts = [_run_batch(prog, seeds[i:i + chunk]) for i in range(0, seeds.size, chunk)]
    return np.concatenate(parts, axis=0)


def run_shot(circuit: Circuit, noise: NoiseModel | None, seed: int) -> tuple[int, ...]:
    return tuple(int(b) for b in run_shots(circuit, noise, [seed])[0])


def bit_roles(circuit: Circuit) -> list[str]:
    roles = circuit.metadata.get("bit_roles", {})
    return [roles.get(b, "") for b in range(circuit.n_bits)]


def sample_counts(circuit: Circuit, noise: NoiseModel | None, n_shots: int, seed: int = 0) -> Counts:
    rec = run_shots(circuit, noise, seed + np.arange(n_shots))
    return Counts.from_records(rec, list(range(circuit.n_bits)), bit_roles(circuit))


def _sample_job(args):
    circuit, noise, n_shots, seed = args
    return sample_counts(circuit, noise, n_shots, seed)


def sample_many(jobs, workers: int = 1) -> list[Counts]:
    """Run ``(circuit, noise, n_shots, seed)`` jobs; output order follows input order."""
    jobs = list(jobs)
    if workers <= 1 or len(jobs) <= 1:
        return [_sample_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sample_job, jobs))
