"""Exact oracle: branch-resolved evolution over classical records.

The state is a map from classical record to an unnormalized operator
(density mode) or ket (ket mode, noiseless only) over the currently live
qubits.  Qubits join the live set when first touched and leave it after
their final measurement, which keeps long circuits with many flag or
ancilla measurements inside the size limit.  Nothing is ever
renormalized, so the engine is linear in its input and accepts arbitrary
operators (e.g. ``|i><j|``) for channel reconstruction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..circuit import Circuit
from .compile import CX, Cond, Damp, Gate1, Meas, PauliChannel, Reset, compile_circuit, instr_qubits
from .kernels import MATRICES, apply_1q, apply_cnot, apply_pauli_string, sl
from .noise import NoiseModel

MAX_DENSITY_QUBITS = 10
MAX_KET_QUBITS = 22


class OracleLimitError(RuntimeError):
    pass


@dataclass
class ExactResult:
    mode: str
    live: list[int]
    branches: dict[str, np.ndarray]

    def probabilities(self) -> dict[str, float]:
        out = {}
        for rec, arr in self.branches.items():
            out[rec] = _weight(arr, self.mode, len(self.live))
        return out


def _weight(arr, mode, nlive) -> float:
    if mode == "ket":
        return float(np.vdot(arr, arr).real)
    d = 1 << nlive
    return float(np.trace(arr.reshape(d, d)).real)


class _Engine:
    def __init__(self, mode: str, limit: int):
        self.mode = mode
        self.limit = limit
        self.live: list[int] = []

    def axes(self, q):
        pos = self.live.index(q)
        if self.mode == "ket":
            return (pos,)
        return (pos, len(self.live) + pos)

    def add(self, branches, q):
        if len(self.live) + 1 > self.limit:
            raise OracleLimitError(f"more than {self.limit} live qubits in {self.mode} mode")
        n = len(self.live)
        out = {}
        for rec, arr in branches.items():
            if self.mode == "ket":
                new = np.zeros(arr.shape + (2,), dtype=complex)
                new[..., 0] = arr
            else:
                new = np.zeros(arr.shape + (2, 2), dtype=complex)
                new[..., 0, 0] = arr
                new = np.moveaxis(new, -2, n)
            out[rec] = new
        self.live.append(q)
        return out

    def gate1(self, arr, q, u):
        ax = self.axes(q)
        apply_1q(arr, ax[0], u)
        if self.mode == "density":
            apply_1q(arr, ax[1], u.conj())

    def cx(self, arr, c, t):
        ac, at = self.axes(c), self.axes(t)
        apply_cnot(arr, ac[0], at[0])
        if self.mode == "density":
            apply_cnot(arr, ac[1], at[1])

    def pauli(self, arr, ch: PauliChannel):
        rows = [self.axes(q)[0] for q in ch.qubits]
        cols = [self.axes(q)[1] for q in ch.qubits]
        acc = arr * (1.0 - ch.p)
        w = ch.p / len(ch.paulis)
        for ps in ch.paulis:
            tmp = arr.copy()
            apply_pauli_string(tmp, rows, ps)
            apply_pauli_string(tmp, cols, ps, conj=True)
            acc += w * tmp
        arr[...] = acc

    def damp(self, arr, q, gamma):
        r, c = self.axes(q)
        nd = arr.ndim
        moved = arr[sl(nd, (r, 1), (c, 1))].copy()
        k0 = np.diag([1.0, np.sqrt(1.0 - gamma)]).astype(complex)
        apply_1q(arr, r, k0)
        apply_1q(arr, c, k0)
        arr[sl(nd, (r, 0), (c, 0))] += gamma * moved

    def project(self, arr, q, m, drop):
        ax = self.axes(q)
        idx = sl(arr.ndim, *[(a, m) for a in ax])
        if drop:
            return arr[idx].copy()
        out = np.zeros_like(arr)
        out[idx] = arr[idx]
        return out


def _last_use(instrs) -> dict[int, int]:
    last = {}
    for i, ins in enumerate(instrs):
        for q in instr_qubits(ins):
            last[q] = i
    return last


def _set_bit(rec: str, bit: int, val: int) -> str:
    return rec[:bit] + str(val) + rec[bit + 1:]


def run_exact(
    circuit: Circuit,
    noise: NoiseModel | None = None,
    init: np.ndarray | None = None,
    init_qubits=(),
    mode: str = "auto",
    keep=(),
) -> ExactResult:
    """Evolve ``init`` (on ``init_qubits``; others start in |0>) through the circuit.

    ``init`` is a ket in ket mode and an operator in density mode.  Qubits
    listed in ``keep`` stay live to the end; every other qubit is traced
    out (density) or left live (ket) after its last use.
    """
    noise = noise or NoiseModel()
    if mode == "auto":
        mode = "ket" if noise.is_noiseless else "density"
    if mode == "ket" and not noise.is_noiseless:
        raise ValueError("ket mode requires a noiseless model")
    prog = compile_circuit(circuit, noise)
    eng = _Engine(mode, MAX_KET_QUBITS if mode == "ket" else MAX_DENSITY_QUBITS)
    init_qubits = list(init_qubits)
    k = len(init_qubits)
    if init is None:
        arr = np.ones((), dtype=complex)
        if k:
            arr = np.zeros((2,) * (k if mode == "ket" else 2 * k), dtype=complex)
            arr[(0,) * arr.ndim] = 1.0
    else:
        arr = np.asarray(init, dtype=complex).reshape((2,) * (k if mode == "ket" else 2 * k)).copy()
    eng.live = list(init_qubits)
    if len(eng.live) > eng.limit:
        raise OracleLimitError("initial register exceeds the oracle limit")
    branches = {"0" * prog.n_bits: arr}
    last = _last_use(prog.instrs)
    keep = set(keep)

    for i, ins in enumerate(prog.instrs):
        for q in instr_qubits(ins):
            if q not in eng.live:
                branches = eng.add(branches, q)
        if isinstance(ins, Gate1):
            for a in branches.values():
                eng.gate1(a, ins.q, ins.u)
        elif isinstance(ins, CX):
            for a in branches.values():
                eng.cx(a, ins.c, ins.t)
        elif isinstance(ins, PauliChannel):
            _need_density(mode)
            for a in branches.values():
                eng.pauli(a, ins)
        elif isinstance(ins, Damp):
            _need_density(mode)
            for a in branches.values():
                eng.damp(a, ins.q, ins.gamma)
        elif isinstance(ins, Meas):
            drop = last[ins.q] == i and ins.q not in keep
            new: dict[str, np.ndarray] = {}
            conf = {0: (1 - ins.eps10, ins.eps10), 1: (ins.eps01, 1 - ins.eps01)}
            for rec, a in branches.items():
                for m in (0, 1):
                    part = eng.project(a, ins.q, m, drop)
                    if not _nonzero(part):
                        continue
                    for r in (0, 1):
                        pr = conf[m][r]
                        if pr == 0.0:
                            continue
                        key = _set_bit(rec, ins.bit, r)
                        new[key] = new[key] + pr * part if key in new else pr * part
            if drop:
                eng.live.remove(ins.q)
            branches = new
        elif isinstance(ins, Reset):
            _need_density(mode)
            drop = last[ins.q] == i and ins.q not in keep
            new = {}
            for rec, a in branches.items():
                p0 = eng.project(a, ins.q, 0, True)
                p1 = eng.project(a, ins.q, 1, True)
                new[rec] = p0 + p1
            eng.live.remove(ins.q)
            branches = new
            if not drop:
                branches = eng.add(branches, ins.q)
        elif isinstance(ins, Cond):
            for rec, a in branches.items():
                if sum(int(rec[b]) for b in ins.bits) % 2:
                    eng.gate1(a, ins.q, ins.u)
                    if ins.noise is not None:
                        _need_density(mode)
                        eng.pauli(a, ins.noise)
        else:  # pragma: no cover
            raise TypeError(ins)

    for q in sorted(keep):
        if q not in eng.live:
            branches = eng.add(branches, q)
    if mode == "density":
        for q in [q for q in eng.live if q not in keep]:
            branches = {rec: _trace_out(a, eng, q) for rec, a in branches.items()}
            eng.live.remove(q)
    return ExactResult(mode, list(eng.live), branches)


def _nonzero(a) -> bool:
    return bool(np.any(np.abs(a) > 1e-14))


def _need_density(mode):
    if mode != "density":
        raise ValueError("noise or reset requires density mode")


def _trace_out(arr, eng, q):
    r, c = eng.axes(q)
    return np.trace(arr, axis1=r, axis2=c)


def reorder_density(arr: np.ndarray, live: list[int], order: list[int]) -> np.ndarray:
    """Matrix over ``order`` (first listed qubit most significant)."""
    n = len(live)
    perm = [live.index(q) for q in order]
    t = np.transpose(arr, perm + [n + p for p in perm])
    d = 1 << n
    return t.reshape(d, d)


def exact_distribution(circuit: Circuit, noise: NoiseModel | None = None, mode: str = "auto") -> dict[str, float]:
    """Exact probability of every classical record (bit 0 leftmost)."""
    res = run_exact(circuit, noise, mode=mode)
    probs = res.probabilities()
    return {k: v for k, v in probs.items() if v > 1e-15}


def exact_channel(circuit: Circuit, noise: NoiseModel | None = None, keep=None, condition=None) -> np.ndarray:
    """Output density matrix on ``keep`` qubits starting from |0...0>.

    Noiseless reset-free circuits are evolved as kets, so they may exceed
    the density-matrix qubit limit.

    Records are summed over (feedforward applied); with ``condition`` only
    records for which ``condition(record)`` is true are kept and the result
    is renormalized.
    """
    keep = list(range(circuit.n_qubits)) if keep is None else list(keep)
    pure = (noise is None or noise.is_noiseless) and not any(op.kind == "RESET" for op in circuit.ops)
    res = run_exact(circuit, noise, mode="ket" if pure else "density", keep=keep)
    d = 1 << len(keep)
    rho = np.zeros((d, d), dtype=complex)
    for rec, a in res.branches.items():
        if condition is None or condition(rec):
            if pure:
                others = [q for q in res.live if q not in keep]
                t = np.transpose(a, [res.live.index(q) for q in keep + others]).reshape(d, -1)
                rho += t @ t.conj().T
            else:
                rho += reorder_density(a, res.live, keep)
    if condition is not None:
        tr = np.trace(rho).real
        if tr <= 0:
            raise ValueError("condition has zero probability")
        rho /= tr
    return rho


def logical_channel(circuit: Circuit, qubits, noise: NoiseModel | None = None, accept=None,
                    mode: str = "auto", out_qubits=None):
    """Superoperator from ``qubits`` to ``out_qubits`` (default: the same qubits).

    Returns ``(lam, p_acc)``: ``lam[i][j]`` is the output operator for input
    ``|i><j|`` summed over accepted records, and ``p_acc`` the acceptance
    probability for the maximally mixed input.
    """
    qubits = list(qubits)
    out = list(qubits if out_qubits is None else out_qubits)
    if len(out) != len(qubits):
        raise ValueError("input and output registers differ in size")
    k = len(qubits)
    d = 1 << k
    noise = noise or NoiseModel()
    if mode == "auto":
        mode = "ket" if noise.is_noiseless else "density"
    lam = np.zeros((d, d, d, d), dtype=complex)
    if mode == "ket":
        kets = []
        for i in range(d):
            v = np.zeros(d, dtype=complex)
            v[i] = 1.0
            res = run_exact(circuit, noise, init=v, init_qubits=qubits, mode="ket", keep=out)
            mats = {}
            n = len(res.live)
            others = [q for q in res.live if q not in out]
            perm = [res.live.index(q) for q in out + others]
            for rec, a in res.branches.items():
                if accept is None or accept(rec):
                    mats[rec] = np.transpose(a, perm).reshape(d, 1 << (n - k))
            kets.append(mats)
        for i in range(d):
            for j in range(d):
                for rec, ai in kets[i].items():
                    aj = kets[j].get(rec)
                    if aj is not None:
                        lam[i, j] += ai @ aj.conj().T
    else:
        for i in range(d):
            for j in range(d):
                e = np.zeros((d, d), dtype=complex)
                e[i, j] = 1.0
                res = run_exact(circuit, noise, init=e, init_qubits=qubits, mode="density", keep=out)
                for rec, a in res.branches.items():
                    if accept is None or accept(rec):
                        lam[i, j] += reorder_density(a, res.live, out)
    p_acc = float(sum(np.trace(lam[i, i]).real for i in range(d)) / d)
    return lam, p_acc


def choi_from_superop(lam: np.ndarray) -> np.ndarray:
    """Choi state (1/d) sum_ij |i><j| (x) L(|i><j|), reference first."""
    d = lam.shape[0]
    choi = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            choi[i * d:(i + 1) * d, j * d:(j + 1) * d] = lam[i, j]
    return choi / d


def unitary_superop(u: np.ndarray) -> np.ndarray:
    d = u.shape[0]
    lam = np.zeros((d, d, d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            lam[i, j] = np.outer(u[:, i], u[:, j].conj())
    return lam
