"""Long-range CNOT and distant Bell-pair builders.

Register layout for every CNOT builder: qubit 0 is the control, qubits
``1..n`` form the linear chain, qubit ``n + 1`` is the target.  Bell-pair
builders use qubits ``0..n-1`` for the chain and leave the pair on its
two ends.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..circuit import Circuit, CircuitError, cnot, cond_x, cond_z, h
from ._builder import Builder

VARIANTS = (
    "unitary_entangle_disentangle",
    "measurement_based",
    "fully_unitary_disentangle",
    "mixed",
)
ALIASES = {
    "ued": "unitary_entangle_disentangle",
    "unitary_ed": "unitary_entangle_disentangle",
    "mb": "measurement_based",
    "fud": "fully_unitary_disentangle",
    "fully_unitary": "fully_unitary_disentangle",
}


@dataclass(frozen=True)
class TeleportSpec:
    n: int
    error_detection: bool = False
    variant: str = "unitary_entangle_disentangle"
    k: int = 1

    def __post_init__(self):
        object.__setattr__(self, "variant", ALIASES.get(self.variant, self.variant))
        if self.variant not in VARIANTS:
            raise CircuitError(f"unknown variant {self.variant!r}")
        if self.n < 3:
            raise CircuitError("chain length n must be at least 3")
        if self.variant == "mixed" and not 1 <= self.k <= self.n:
            raise CircuitError(f"invalid branch count k={self.k} for n={self.n}")


def middle_index(length: int) -> int:
    """Root position inside a chain segment: ceil((length - 1) / 2)."""
    return length // 2


def grow_chain(seg: list[int], root: int) -> list[tuple[int, int]]:
    """CNOTs spreading a GHZ from ``seg[root]`` over ``seg`` in layer order.

    The root feeds the longer side first (the left side on a tie); each
    side then advances one qubit per layer.
    """
    left = [seg[i] for i in range(root - 1, -1, -1)]
    right = [seg[i] for i in range(root + 1, len(seg))]
    first, second = (left, right) if len(left) >= len(right) else (right, left)
    r = seg[root]
    out = []
    for t in range(max(len(first), len(second) + 1)):
        if t < len(first):
            out.append((first[t - 1] if t else r, first[t]))
        if 1 <= t <= len(second):
            out.append((second[t - 2] if t > 1 else r, second[t - 1]))
    return out


def _locc(b: Builder, control: int, head: int, tail: int, target: int):
    b.mark("locc")
    b.add(cnot(control, head), cnot(tail, target))
    a = b.measure(head, "locc")
    bb = b.measure(tail, "locc", basis="X")
    return a, bb


def _cnot_roles(b: Builder, n: int) -> tuple[int, int, list[int]]:
    control, target = 0, n + 1
    chain = list(range(1, n + 1))
    b.roles[control] = "control"
    b.roles[target] = "target"
    for q in chain:
        b.roles[q] = "chain"
    return control, target, chain


def _ued_chain(b: Builder, chain: list[int], detect: bool):
    """Steps A-C on ``chain``; returns (root X bit, flag bits)."""
    n = len(chain)
    p = middle_index(n)
    head, tail, root = chain[0], chain[-1], chain[p]
    b.mark("step_a")
    b.add(h(root))
    grow = grow_chain(chain, p)
    b.add(*(cnot(c, t) for c, t in grow))
    b.mark("step_b")
    undo = [(c, t) for c, t in reversed(grow) if t not in (head, tail)]
    b.add(*(cnot(c, t) for c, t in undo))
    b.mark("step_c")
    flags = []
    if detect:
        for _, t in undo:
            flags.append(b.measure(t, "flag", optional=True))
            b.roles[t] = "flag"
    m = b.measure(root, "root", basis="X")
    b.roles[root] = "root"
    return m, flags


def build_unitary_ed_cnot(spec: TeleportSpec) -> Circuit:
    """Grow a chain GHZ, unitarily shrink it to {head, root, tail}, teleport."""
    n = spec.n
    b = Builder(n + 2)
    control, target, chain = _cnot_roles(b, n)
    m, flags = _ued_chain(b, chain, spec.error_detection)
    a, bb = _locc(b, control, chain[0], chain[-1], target)
    b.add(cond_x(target, [a]), cond_z(control, [bb, m]))
    b.mark("end")
    return b.circuit(
        variant=spec.variant, n=n, control=control, target=target, chain=chain,
        flag_bits=flags, root_bits=[m], locc_bits=[a, bb],
    )


def build_unitary_ed_bell(n: int, error_detection: bool = False) -> Circuit:
    """Bell pair on the ends of an ``n``-qubit chain (steps A-C only)."""
    if n < 3:
        raise CircuitError("chain length n must be at least 3")
    b = Builder(n)
    chain = list(range(n))
    for q in chain:
        b.roles[q] = "chain"
    m, flags = _ued_chain(b, chain, error_detection)
    b.add(cond_z(chain[-1], [m]))
    b.mark("end")
    b.roles[chain[0]] = b.roles[chain[-1]] = "pair"
    return b.circuit(variant="unitary_entangle_disentangle", n=n, k=1, pair=[chain[0], chain[-1]],
                     chain=chain, flag_bits=flags, root_bits=[m], syndrome_bits=[])


def build_measurement_based_cnot(spec: TeleportSpec, merged: bool = True) -> Circuit:
    """Constant-depth CNOT from Bell pairs fused by mid-circuit measurement.

    ``merged=False`` keeps the intermediate form with explicit X corrections
    on the fused GHZ and a Z correction on the head; ``merged=True`` pushes
    every correction into the two final conditional gates.
    """
    n = spec.n
    b = Builder(n + 2)
    control, target, chain = _cnot_roles(b, n)
    head, tail = chain[0], chain[-1]
    odd = n % 2 == 1
    pairs = [(chain[i], chain[i + 1]) for i in range(0, n - 1 if odd else n, 2)]
    b.mark("step_a")
    for p0, p1 in pairs:
        b.add(h(p0), cnot(p0, p1))
    if odd:
        b.add(h(tail))
        if merged:
            # tail only acts as a control, so its LOCC CNOT can come first
            b.add(cnot(tail, target))
    b.mark("fusion")
    fusions: list[int] = []
    members = [pairs[0][0], pairs[0][1]]
    for i in range(1, len(pairs)):
        c, t = pairs[i - 1][1], pairs[i][0]
        b.add(cnot(c, t))
        fusions.append(b.measure(t, "fusion"))
        b.roles[t] = "fusion"
        if not merged:
            b.add(cond_x(pairs[i][1], fusions[-1:]))
        members.append(pairs[i][1])
    if odd:
        c = pairs[-1][1]
        b.add(cnot(tail, c))
        fusions.append(b.measure(c, "fusion"))
        b.roles[c] = "fusion"
        members.remove(c)
        if not merged:
            b.add(cond_x(tail, fusions[-1:]))
        members.append(tail)
    b.mark("disentangle")
    xbits = []
    for q in members:
        if q not in (head, tail):
            xbits.append(b.measure(q, "root", basis="X"))
            b.roles[q] = "root"
    if merged:
        b.mark("locc")
        b.add(cnot(control, head))
        if not odd:
            b.add(cnot(tail, target))
        a = b.measure(head, "locc")
        bb = b.measure(tail, "locc", basis="X")
        b.add(cond_x(target, [a] + fusions), cond_z(control, [bb] + xbits))
    else:
        if xbits:
            b.add(cond_z(head, xbits))
        a, bb = _locc(b, control, head, tail, target)
        b.add(cond_x(target, [a]), cond_z(control, [bb]))
    b.mark("end")
    return b.circuit(
        variant=spec.variant, n=n, control=control, target=target, chain=chain, merged=merged,
        flag_bits=[], root_bits=xbits, syndrome_bits=fusions, locc_bits=[a, bb],
    )


def build_fully_unitary_cnot(spec: TeleportSpec) -> Circuit:
    """Disentangle center-outward so only the chain ends stay entangled."""
    n = spec.n
    b = Builder(n + 2)
    control, target, chain = _cnot_roles(b, n)
    p = middle_index(n)
    head, tail = chain[0], chain[-1]
    b.mark("step_a")
    b.add(h(chain[p]))
    grow = grow_chain(chain, p)
    b.add(*(cnot(c, t) for c, t in grow))
    b.mark("step_b")
    # root is absorbed by its neighbor on the longer side, then both sides peel outward
    side = 1 if n - 1 - p >= p else -1
    undo = [(chain[p + side], chain[p])]
    left = list(range(p - 1, 0, -1))
    right = list(range(p + 1, n - 1))
    for i in range(max(len(left), len(right))):
        if i < len(right):
            undo.append((chain[right[i] + 1], chain[right[i]]))
        if i < len(left):
            undo.append((chain[left[i] - 1], chain[left[i]]))
    b.add(*(cnot(c, t) for c, t in undo))
    flags = []
    if spec.error_detection:
        for _, t in undo:
            flags.append(b.measure(t, "flag", optional=True))
            b.roles[t] = "flag"
    a, bb = _locc(b, control, head, tail, target)
    b.add(cond_x(target, [a]), cond_z(control, [bb]))
    b.mark("end")
    return b.circuit(
        variant=spec.variant, n=n, control=control, target=target, chain=chain,
        flag_bits=flags, root_bits=[], locc_bits=[a, bb],
    )


def mixed_block_sizes(n: int, k: int) -> list[int]:
    """Block sizes for ``k`` blocks separated by ``k - 1`` fusion ancillas.

    Sizes differ by at most one; the larger sizes go to the two end blocks
    first, then left to right.
    """
    total = n - (k - 1)
    if k < 1 or total < k:
        raise CircuitError(f"invalid branch count k={k} for n={n}")
    base, extra = divmod(total, k)
    order = [0, k - 1] + list(range(1, k - 1)) if k > 1 else [0]
    sizes = [base] * k
    for i in order[:extra]:
        sizes[i] += 1
    if k > 1 and (sizes[0] < 2 or sizes[-1] < 2):
        raise CircuitError(f"invalid branch count k={k} for n={n}: end blocks need two qubits")
    return sizes


def _asap(level: dict[int, int], c: int, t: int) -> int:
    return max(level.get(c, 0), level.get(t, 0)) + 1


def _mixed_chain(b: Builder, chain: list[int], k: int, detect: bool):
    """Fused-block GHZ on ``chain`` reduced to a Bell pair on its ends.

    Returns (root bits, syndrome bits, flag bits).
    """
    sizes = mixed_block_sizes(len(chain), k)
    blocks, ancillas = [], []
    pos = 0
    for j, s in enumerate(sizes):
        blocks.append(chain[pos:pos + s])
        pos += s
        if j < k - 1:
            ancillas.append(chain[pos])
            pos += 1
    head, tail = chain[0], chain[-1]
    level: dict[int, int] = {}
    b.mark("step_a")
    roots = []
    for j, seg in enumerate(blocks):
        # the last block mirrors the rule so its root never lands on the tail
        r = middle_index(len(seg)) if j < k - 1 else (len(seg) - 1) // 2
        roots.append(seg[r])
        b.add(h(seg[r]))
        for c, t in grow_chain(seg, r):
            b.add(cnot(c, t))
            level[c] = level[t] = _asap(level, c, t)
    # per-side sequences: optional fusion CNOT from the block end, then
    # disentangling CNOTs from the far end back toward the root
    seqs = []
    for j, seg in enumerate(blocks):
        r = seg.index(roots[j])
        keep = {roots[j], head, tail}
        for side, anc in ((seg[:r][::-1], ancillas[j - 1] if j > 0 else None),
                          (seg[r + 1:], ancillas[j] if j < k - 1 else None)):
            path = [roots[j]] + side
            seq = []
            if anc is not None:
                seq.append((path[-1], anc))
            for i in range(len(path) - 1, 0, -1):
                if path[i] not in keep:
                    seq.append((path[i - 1], path[i]))
            seqs.append(seq)
    b.mark("step_b")
    undo = []
    heads = [0] * len(seqs)
    while True:
        best = None
        for i, seq in enumerate(seqs):
            if heads[i] < len(seq):
                c, t = seq[heads[i]]
                tt = _asap(level, c, t)
                if best is None or tt < best[0]:
                    best = (tt, i)
        if best is None:
            break
        c, t = seqs[best[1]][heads[best[1]]]
        heads[best[1]] += 1
        level[c] = level[t] = best[0]
        b.add(cnot(c, t))
        if t not in ancillas:
            undo.append(t)
    b.mark("step_c")
    syndromes = []
    for a in ancillas:
        syndromes.append(b.measure(a, "ancilla"))
        b.roles[a] = "ancilla"
    flags = []
    if detect:
        for t in undo:
            flags.append(b.measure(t, "flag", optional=True))
            b.roles[t] = "flag"
    root_bits = []
    for r in roots:
        root_bits.append(b.measure(r, "root", basis="X"))
        b.roles[r] = "root"
    return root_bits, syndromes, flags


def build_mixed_style_bell(n: int, k: int, error_detection: bool = False) -> Circuit:
    """Bell pair on the ends of an ``n``-qubit chain from ``k`` fused blocks.

    ``k = 1`` returns the unitary entangle-disentangle preparation.
    """
    if n < 3:
        raise CircuitError("chain length n must be at least 3")
    if not 1 <= k <= max(1, n // 2):
        raise CircuitError(f"invalid branch count k={k} for n={n}")
    if k == 1:
        return build_unitary_ed_bell(n, error_detection)
    b = Builder(n)
    chain = list(range(n))
    for q in chain:
        b.roles[q] = "chain"
    roots, syn, flags = _mixed_chain(b, chain, k, error_detection)
    b.add(cond_x(chain[-1], syn), cond_z(chain[-1], roots))
    b.mark("end")
    b.roles[chain[0]] = b.roles[chain[-1]] = "pair"
    return b.circuit(variant="mixed", n=n, k=k, pair=[chain[0], chain[-1]], chain=chain,
                     flag_bits=flags, root_bits=roots, syndrome_bits=syn,
                     block_sizes=mixed_block_sizes(n, k))


def build_mixed_style_cnot(spec: TeleportSpec) -> Circuit:
    """Long-range CNOT consuming a mixed-style Bell pair."""
    n, k = spec.n, spec.k
    if k == 1:
        return build_unitary_ed_cnot(TeleportSpec(n, spec.error_detection)).with_metadata(variant="mixed", k=1)
    if not 1 <= k <= n // 2:
        raise CircuitError(f"invalid branch count k={k} for n={n}")
    b = Builder(n + 2)
    control, target, chain = _cnot_roles(b, n)
    roots, syn, flags = _mixed_chain(b, chain, k, spec.error_detection)
    a, bb = _locc(b, control, chain[0], chain[-1], target)
    b.add(cond_x(target, [a] + syn), cond_z(control, [bb] + roots))
    b.mark("end")
    return b.circuit(
        variant="mixed", n=n, k=k, control=control, target=target, chain=chain,
        flag_bits=flags, root_bits=roots, syndrome_bits=syn, locc_bits=[a, bb],
        block_sizes=mixed_block_sizes(n, k),
    )


def build_teleported_cnot(spec: TeleportSpec) -> Circuit:
    if spec.variant == "unitary_entangle_disentangle":
        return build_unitary_ed_cnot(spec)
    if spec.variant == "measurement_based":
        return build_measurement_based_cnot(spec)
    if spec.variant == "fully_unitary_disentangle":
        return build_fully_unitary_cnot(spec)
    return build_mixed_style_cnot(spec)
