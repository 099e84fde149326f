"""GHZ preparation by BFS growth with Z-parity flag checks."""
from __future__ import annotations

from dataclasses import dataclass

from ..circuit import Circuit, CircuitError, Op, cnot, h, swap
from ..layout import CouplingGraph, FlagPlacement, LayoutError, bfs_schedule, entangle_times
from ._builder import Builder


@dataclass(frozen=True)
class GhzSpec:
    graph: CouplingGraph
    data: tuple[int, ...]
    root: int
    flags: tuple[FlagPlacement, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "data", tuple(int(v) for v in self.data))
        object.__setattr__(self, "flags", tuple(self.flags))
        if self.root not in self.data:
            raise CircuitError("root must be one of the data qubits")
        used = set(self.data)
        for f in self.flags:
            if f.flag in used:
                raise CircuitError(f"flag node {f.flag} collides with another qubit")
            used.add(f.flag)
            if not set(f.checked_pair) <= set(self.data):
                raise CircuitError(f"flag {f.flag} checks non-data qubits {f.checked_pair}")
            if not f.valid_on(self.graph):
                raise CircuitError(f"flag {f.flag} is not adjacent to its checked pair")


class _Slots:
    """Per-node busy layers for placing extra two-qubit gates."""

    def __init__(self):
        self.busy: dict[int, set[int]] = {}

    def free(self, v, t) -> bool:
        return t not in self.busy.get(v, ())

    def take(self, t, *vs):
        for v in vs:
            self.busy.setdefault(v, set()).add(t)

    def first_free(self, t0, *vs) -> int:
        t = t0
        while not all(self.free(v, t) for v in vs):
            t += 1
        return t

    def last(self, v) -> int:
        return max(self.busy.get(v, {0}))


def build_ghz(spec: GhzSpec) -> Circuit:
    """Unitary GHZ preparation over ``spec.data`` plus flag parity checks.

    Circuit qubits are the data nodes in the given order followed by the
    flag nodes.  Type-0 checks are slotted into the earliest layers where
    the data qubit and the flag are idle; type-1 checks run after their
    data qubits finish growing the state.  Flag bits come first, in flag
    order; no data measurement is included.
    """
    g = spec.graph
    try:
        schedule = bfs_schedule(g, spec.root, spec.data)
    except LayoutError as exc:
        raise CircuitError(str(exc)) from exc
    nodes = list(spec.data) + [f.flag for f in spec.flags]
    q_of = {v: i for i, v in enumerate(nodes)}
    b = Builder(len(nodes))
    for v in spec.data:
        b.roles[q_of[v]] = "data"
    b.roles[q_of[spec.root]] = "root"

    slots = _Slots()
    timed: list[tuple[int, int, list[Op]]] = []  # (layer, seq, ops)
    seq = 0
    tree = []
    for t, layer in enumerate(schedule, 1):
        for c, tq in layer:
            slots.take(t, c, tq)
            timed.append((t, seq, [cnot(q_of[c], q_of[tq])]))
            tree.append([q_of[c], q_of[tq]])
            seq += 1
    joined = entangle_times(schedule)
    joined.setdefault(spec.root, 0)
    loc = {v: v for v in spec.data}  # data node -> node currently holding it

    flag_bits, flag_pairs, pending = [], [], []
    for f in spec.flags:
        i, j = f.checked_pair
        if f.s == 0:
            best = None
            for a, c in ((i, j), (j, i)):
                t1 = slots.first_free(joined[a] + 1, a, f.flag)
                slots.take(t1, a, f.flag)
                t2 = slots.first_free(joined[c] + 1, c, f.flag)
                slots.busy[a].discard(t1)
                slots.busy[f.flag].discard(t1)
                cand = (max(t1, t2), t1, t2, a, c)
                if best is None or cand[:1] < best[:1]:
                    best = cand
            _, t1, t2, a, c = best
            if t2 < t1:
                t1, t2, a, c = t2, t1, c, a
            slots.take(t1, a, f.flag)
            slots.take(t2, c, f.flag)
            timed.append((t1, seq, [cnot(q_of[a], q_of[f.flag])]))
            timed.append((t2, seq + 1, [cnot(q_of[c], q_of[f.flag])]))
            pending.append((t2, seq + 1, q_of[f.flag], f, "flag"))
            seq += 2
            b.roles[q_of[f.flag]] = "flag"
        else:
            pending.append((None, None, None, f, "flag1"))
    for idx, (_, _, _, f, kind) in enumerate(pending):
        if kind != "flag1":
            continue
        via = f.swap_route[0]
        other = f.checked_pair[1] if via == f.checked_pair[0] else f.checked_pair[0]
        t0 = max(slots.last(via), slots.last(f.flag), slots.last(other)) + 1
        t0 = slots.first_free(t0, via, f.flag)
        slots.take(t0, via, f.flag)
        t1 = slots.first_free(t0 + 1, via, f.flag)
        slots.take(t1, via, f.flag)
        t2 = slots.first_free(t1 + 1, via, other)
        slots.take(t2, via, other)
        # after the SWAP the data qubit sits on the flag node, the ancilla on ``via``
        timed.append((t0, seq, [swap(q_of[via], q_of[f.flag])]))
        timed.append((t1, seq + 1, [cnot(q_of[f.flag], q_of[via])]))
        timed.append((t2, seq + 2, [cnot(q_of[other], q_of[via])]))
        seq += 3
        loc[via] = f.flag
        pending[idx] = (t2, seq - 1, q_of[via], f, "flag1")
        b.roles[q_of[f.flag]] = "flag1"

    b.mark("prep")
    b.add(h(q_of[spec.root]))
    meas_after = {s: (q, f, kind) for t, s, q, f, kind in pending}
    for t, s, ops in sorted(timed, key=lambda e: (e[0], e[1])):
        b.add(*ops)
        if s in meas_after and ops[0].kind == "CNOT" and ops[0].qubits[1] == meas_after[s][0]:
            q, f, kind = meas_after[s]
            flag_bits.append(b.measure(q, "flag", optional=True))
            flag_pairs.append([f.checked_pair[0], f.checked_pair[1], f.flag, f.s])
    # keep flag bits ordered as the flags were listed
    order = {tuple(p[:3]): k for k, p in enumerate(
        [[f.checked_pair[0], f.checked_pair[1], f.flag] for f in spec.flags])}
    ranked = sorted(zip(flag_pairs, flag_bits), key=lambda e: order[tuple(e[0][:3])])
    flag_pairs = [p for p, _ in ranked]
    flag_bits = [bit for _, bit in ranked]
    b.mark("end")
    data_q = [q_of[loc[v]] for v in spec.data]
    return b.circuit(
        protocol="ghz",
        nodes_of={i: v for i, v in enumerate(nodes)},
        data_nodes=list(spec.data),
        data_qubits=data_q,
        root_qubit=q_of[spec.root],
        tree_cnots=tree,
        final_location={v: q_of[loc[v]] for v in spec.data},
        flag_bits=flag_bits,
        flag_pairs=flag_pairs,
        schedule_depth=len(schedule),
    )


def ghz_data_prep(ghz: Circuit) -> list[Op]:
    """Flag-free unitary preparation acting on the final data locations."""
    moved = {q: ghz.metadata["final_location"][v]
             for q, v in ghz.metadata["nodes_of"].items() if v in ghz.metadata["final_location"]}
    ops = [h(moved[ghz.metadata["root_qubit"]])]
    ops += [cnot(moved[c], moved[t]) for c, t in ghz.metadata["tree_cnots"]]
    return ops


def measure_data(ghz: Circuit) -> Circuit:
    """Append Z measurements of every data qubit (bits follow the flag bits)."""
    n_flag = ghz.n_bits
    data_q = ghz.metadata["data_qubits"]
    ops = [Op("MEASURE", (q,), (n_flag + k,)) for k, q in enumerate(data_q)]
    meta = dict(ghz.metadata)
    meta["data_bits"] = list(range(n_flag, n_flag + len(data_q)))
    roles = dict(meta.get("bit_roles", {}))
    roles.update({n_flag + k: "data" for k in range(len(data_q))})
    meta["bit_roles"] = roles
    return Circuit(ghz.n_qubits, n_flag + len(data_q), ghz.ops + tuple(ops), meta)
