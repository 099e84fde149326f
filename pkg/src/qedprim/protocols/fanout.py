"""Long-range fan-out: one control, several targets, one shared GHZ."""
from __future__ import annotations

from dataclasses import dataclass

from ..circuit import Circuit, CircuitError, Op, cnot, cond_x, cond_z, h
from ..layout import CouplingGraph
from ._builder import Builder
from .teleport import grow_chain, middle_index


@dataclass(frozen=True)
class FanoutSpec:
    control: int
    targets: tuple[int, ...]
    path: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "path", tuple(self.path))
        if not self.targets:
            raise CircuitError("fan-out needs at least one target")
        if len(set(self.path)) != len(self.path):
            raise CircuitError("path must be simple")
        parties = (self.control,) + self.targets
        if len(set(parties)) != len(parties):
            raise CircuitError("control and targets must be distinct")
        missing = [p for p in parties if p not in self.path]
        if missing:
            raise CircuitError(f"path misses parties {missing}")

    def check_graph(self, g: CouplingGraph) -> None:
        for a, b in zip(self.path, self.path[1:]):
            if not g.has_edge(a, b):
                raise CircuitError(f"path step ({a}, {b}) is not an edge")


def skip_cnot(c: int, t: int, between: list[int]) -> list[Op]:
    """CNOT(c -> t) from nearest-neighbour CNOTs through ``between``.

    The qubits in between are left unchanged whatever their state.
    """
    if not between:
        return [cnot(c, t)]
    b, rest = between[0], between[1:]
    return [cnot(c, b)] + skip_cnot(b, t, rest) + [cnot(c, b)] + skip_cnot(b, t, rest)


def choose_mediators(path, parties) -> dict[int, int]:
    """Party -> adjacent non-party path qubit that will carry its GHZ share.

    Parties are visited in path order; a party already next to a chosen
    mediator reuses it, otherwise the neighbour shared with the next party
    is preferred, then the earlier one along the path.
    """
    pos = {v: i for i, v in enumerate(path)}
    party_set = set(parties)
    ordered = sorted(parties, key=pos.get)
    chosen: list[int] = []
    out = {}
    for k, p in enumerate(ordered):
        nb = [path[i] for i in (pos[p] - 1, pos[p] + 1) if 0 <= i < len(path) and path[i] not in party_set]
        have = [m for m in nb if m in chosen]
        if have:
            out[p] = have[0]
            continue
        if not nb:
            raise CircuitError(f"party {p} has no adjacent mediator available")
        nxt = ordered[k + 1] if k + 1 < len(ordered) else None
        shared = [m for m in nb if nxt is not None and abs(pos[m] - pos[nxt]) == 1]
        m = shared[0] if shared else nb[0]
        chosen.append(m)
        out[p] = m
    return out


def build_fanout(spec: FanoutSpec) -> Circuit:
    """Apply CNOT(control -> t) for every target through a GHZ on the path.

    Circuit qubit ``i`` is ``spec.path[i]``.
    """
    path = list(spec.path)
    q = {v: i for i, v in enumerate(path)}
    parties = [spec.control] + list(spec.targets)
    party_set = set(parties)
    med = choose_mediators(path, parties)
    mediators = sorted(set(med.values()), key=q.get)
    ghz = [v for v in path if v not in party_set]
    b = Builder(len(path))
    b.roles.update({q[v]: "ghz" for v in ghz})
    b.roles[q[spec.control]] = "control"
    b.roles.update({q[t]: "target" for t in spec.targets})

    def between(a, c):
        lo, hi = sorted((q[a], q[c]))
        seg = [path[i] for i in range(lo + 1, hi)]
        return [q[v] for v in (seg if q[a] < q[c] else seg[::-1])]

    def link(a, c):
        return skip_cnot(q[a], q[c], between(a, c))

    b.mark("step_a")
    root = middle_index(len(ghz))
    b.add(h(q[ghz[root]]))
    for c, t in grow_chain(ghz, root):
        b.add(*link(c, t))
    b.mark("step_b")
    # each run of non-mediators is peeled from its far end toward the mediator it hugs
    runs, cur = [], []
    gi = {v: i for i, v in enumerate(ghz)}
    for v in ghz:
        if v in mediators:
            if cur:
                runs.append(cur)
            cur = []
        else:
            cur.append(v)
    if cur:
        runs.append(cur)
    undo = []
    for run in runs:
        left = ghz[gi[run[0]] - 1] if gi[run[0]] > 0 else None
        right = ghz[gi[run[-1]] + 1] if gi[run[-1]] + 1 < len(ghz) else None
        cost_l = len(between(left, run[0])) if left is not None else None
        cost_r = len(between(run[-1], right)) if right is not None else None
        toward_left = right is None or (left is not None and cost_l <= cost_r)
        for v in (run[::-1] if toward_left else run):
            i = gi[v]
            undo.append((ghz[i - 1] if toward_left else ghz[i + 1], v))
    for c, t in undo:
        b.add(*link(c, t))
    flags = []
    b.mark("step_c")
    for _, t in undo:
        flags.append(b.measure(q[t], "flag", optional=True))
        b.roles[q[t]] = "flag"
    b.mark("locc")
    mc = med[spec.control]
    for t in spec.targets:
        b.add(cnot(q[med[t]], q[t]))
    b.add(cnot(q[spec.control], q[mc]))
    a = b.measure(q[mc], "locc")
    others = []
    for m in mediators:
        if m != mc:
            others.append(b.measure(q[m], "locc", basis="X"))
        b.roles[q[m]] = "mediator"
    for t in spec.targets:
        b.add(cond_x(q[t], [a]))
    if others:
        b.add(cond_z(q[spec.control], others))
    b.mark("end")
    return b.circuit(
        protocol="fanout", nodes_of={i: v for i, v in enumerate(path)},
        control=q[spec.control], targets=[q[t] for t in spec.targets],
        mediators=[q[m] for m in mediators], flag_bits=flags, locc_bits=[a] + others,
        flag_nodes=[t for _, t in undo],
    )
