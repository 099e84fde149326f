"""Post-selection, tensored readout mitigation, bootstrap and the P_max diagnostic."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .sim.counts import Counts

MAX_MITIGATED_BITS = 24


@dataclass(frozen=True)
class PostSelectionRule:
    """Accept a shot iff every flag bit reads 0 and every parity set is even.

    Bits are identified by classical bit index, matched against a Counts'
    ``bit_order``.
    """

    flag_bits: tuple[int, ...] = ()
    parities: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "flag_bits", tuple(int(b) for b in self.flag_bits))
        object.__setattr__(self, "parities", tuple(tuple(int(b) for b in p) for p in self.parities))

    @property
    def bits(self) -> tuple[int, ...]:
        out = list(self.flag_bits)
        for p in self.parities:
            out += [b for b in p if b not in out]
        return tuple(dict.fromkeys(out))

    def _positions(self, bit_order) -> tuple[list[int], list[list[int]]]:
        pos = {b: i for i, b in enumerate(bit_order)}
        missing = [b for b in self.bits if b not in pos]
        if missing:
            raise ValueError(f"bit(s) {missing} not present in the record")
        return [pos[b] for b in self.flag_bits], [[pos[b] for b in p] for p in self.parities]

    def accepts(self, key: str, bit_order) -> bool:
        flags, pars = self._positions(bit_order)
        return all(key[i] == "0" for i in flags) and all(sum(key[i] == "1" for i in p) % 2 == 0 for p in pars)

    def mask(self, records: np.ndarray, bit_order=None) -> np.ndarray:
        """Boolean accept mask over a (shots, bits) record array."""
        records = np.asarray(records)
        flags, pars = self._positions(bit_order if bit_order is not None else range(records.shape[1]))
        ok = np.ones(records.shape[0], dtype=bool)
        for i in flags:
            ok &= records[:, i] == 0
        for p in pars:
            ok &= records[:, p].sum(axis=1) % 2 == 0
        return ok

    def to_dict(self) -> dict:
        return {"flag_bits": list(self.flag_bits), "parities": [list(p) for p in self.parities]}


def post_select(counts: Counts, rule: PostSelectionRule, drop: bool = True) -> tuple[Counts, float]:
    """Keep accepted shots; optionally remove the rule's bits from the strings."""
    if counts.n_shots == 0:
        raise ValueError("no shots")
    order = list(counts.bit_order)
    flags, pars = rule._positions(order)
    removed = set(flags) | {i for p in pars for i in p} if drop else set()
    keep = [i for i in range(len(order)) if i not in removed]
    out: dict[str, int] = {}
    for k, v in counts.counts.items():
        if all(k[i] == "0" for i in flags) and all(sum(k[i] == "1" for i in p) % 2 == 0 for p in pars):
            kk = "".join(k[i] for i in keep)
            out[kk] = out.get(kk, 0) + v
    kept = sum(out.values())
    roles = [counts.roles[i] for i in keep] if counts.roles else []
    return Counts(out, kept, [order[i] for i in keep], roles), 1.0 - kept / counts.n_shots


# -- readout mitigation ---------------------------------------------------------


@dataclass(frozen=True)
class MitigationSpec:
    """Per-bit confusion matrices ``A[read, true]``; columns are probability vectors."""

    matrices: dict = field(default_factory=dict)

    def __post_init__(self):
        mats = {}
        for b, a in dict(self.matrices).items():
            a = np.asarray(a, dtype=float)
            if a.shape != (2, 2):
                raise ValueError(f"confusion matrix for bit {b} must be 2x2")
            if np.any(a < 0) or not np.allclose(a.sum(axis=0), 1.0, atol=1e-12):
                raise ValueError(f"columns of the confusion matrix for bit {b} must be probability vectors")
            if abs(np.linalg.det(a)) < 1e-12:
                raise ValueError(f"confusion matrix for bit {b} is singular")
            mats[int(b)] = a
        object.__setattr__(self, "matrices", mats)

    @classmethod
    def from_eps(cls, bits, eps01: float, eps10: float) -> "MitigationSpec":
        """eps01 = P(read 0 | true 1), eps10 = P(read 1 | true 0), as in NoiseModel."""
        a = [[1 - eps10, eps01], [eps10, 1 - eps01]]
        return cls({b: a for b in bits})

    @classmethod
    def from_noise(cls, bits, noise) -> "MitigationSpec":
        return cls.from_eps(bits, noise.eps01, noise.eps10)

    def to_dict(self) -> dict:
        return {"matrices": {str(b): a.tolist() for b, a in sorted(self.matrices.items())}}

    @classmethod
    def from_dict(cls, d: dict) -> "MitigationSpec":
        if "matrices" in d:
            return cls({int(b): a for b, a in d["matrices"].items()})
        return cls.from_eps([int(b) for b in d["bits"]], float(d["eps01"]), float(d["eps10"]))

    @classmethod
    def from_json(cls, text: str) -> "MitigationSpec":
        return cls.from_dict(json.loads(text))


def _as_dist(data) -> tuple[dict[str, float], list]:
    if isinstance(data, Counts):
        if data.n_shots == 0:
            raise ValueError("no shots")
        return data.probabilities(), list(data.bit_order)
    dist, order = data
    return dict(dist), list(order)


def _apply_bitwise(dist: dict[str, float], pos: int, m: np.ndarray) -> dict[str, float]:
    out: dict[str, float] = {}
    for k, v in dist.items():
        src = int(k[pos])
        for dst in (0, 1):
            w = m[dst, src] * v
            if w != 0.0:
                kk = k[:pos] + str(dst) + k[pos + 1:]
                out[kk] = out.get(kk, 0.0) + w
    return out


def apply_confusion(dist: dict[str, float], bit_order, spec: MitigationSpec, bits=None) -> dict[str, float]:
    """Forward readout noise on a distribution (used to synthesize noisy data)."""
    pos = {b: i for i, b in enumerate(bit_order)}
    for b in (spec.matrices if bits is None else bits):
        dist = _apply_bitwise(dist, pos[b], spec.matrices[b])
    return dist


def clip_renormalize(quasi: dict[str, float]) -> dict[str, float]:
    pos = {k: v for k, v in quasi.items() if v > 0}
    total = sum(pos.values())
    if total <= 0:
        raise ValueError("no positive mass left after clipping")
    return {k: v / total for k, v in pos.items()}


def mitigate(data, spec: MitigationSpec, bits=None) -> tuple[dict[str, float], dict[str, float]]:
    """Apply the inverse confusion bit by bit; returns (quasi-distribution, clipped distribution).

    ``data`` is a Counts or a (distribution, bit_order) pair.  Only the
    selected bits (default: all bits with a matrix and present) are corrected.
    """
    dist, order = _as_dist(data)
    pos = {b: i for i, b in enumerate(order)}
    sel = [b for b in (spec.matrices if bits is None else bits) if b in pos]
    missing = [b for b in sel if b not in spec.matrices]
    if missing:
        raise ValueError(f"no confusion matrix for bit(s) {missing}")
    if len(sel) > MAX_MITIGATED_BITS:
        raise ValueError(f"mitigation over more than {MAX_MITIGATED_BITS} bits is not supported")
    for b in sel:
        dist = _apply_bitwise(dist, pos[b], np.linalg.inv(spec.matrices[b]))
    dist = {k: float(v) for k, v in dist.items()}
    return dist, clip_renormalize(dist)


def mitigate_then_select(data, spec: MitigationSpec, rule: PostSelectionRule) -> tuple[dict[str, float], float]:
    """Mitigate flag bits, post-select, then mitigate the remaining bits.

    Returns the final distribution over the non-flag bits and the
    discarded probability mass.
    """
    dist, order = _as_dist(data)
    flag_set = set(rule.bits)
    _, dist = mitigate((dist, order), spec, [b for b in order if b in flag_set and b in spec.matrices])
    flags, pars = rule._positions(order)
    removed = set(flags) | {i for p in pars for i in p}
    keep = [i for i in range(len(order)) if i not in removed]
    sel: dict[str, float] = {}
    for k, v in dist.items():
        if all(k[i] == "0" for i in flags) and all(sum(k[i] == "1" for i in p) % 2 == 0 for p in pars):
            kk = "".join(k[i] for i in keep)
            sel[kk] = sel.get(kk, 0.0) + v
    kept = sum(sel.values())
    if kept <= 0:
        raise ValueError("post-selection kept no probability mass")
    sel = {k: v / kept for k, v in sel.items()}
    rest = [order[i] for i in keep]
    _, final = mitigate((sel, rest), spec, [b for b in rest if b in spec.matrices])
    return final, 1.0 - kept


# -- statistics -----------------------------------------------------------------


def bootstrap(counts: Counts, statistic: Callable[[Counts], float], b: int = 50, seed: int = 0) -> tuple[float, float]:
    """Mean and sample standard deviation of ``statistic`` over ``b`` multinomial resamples."""
    if b < 2:
        raise ValueError("need at least two resamples")
    if counts.n_shots == 0:
        raise ValueError("no shots")
    keys = sorted(counts.counts)
    p = np.array([counts.counts[k] for k in keys], dtype=float) / counts.n_shots
    vals = []
    for i in range(b):
        rng = np.random.default_rng([seed, i])
        draw = rng.multinomial(counts.n_shots, p)
        c = Counts({k: int(v) for k, v in zip(keys, draw) if v}, counts.n_shots,
                   list(counts.bit_order), list(counts.roles))
        vals.append(float(statistic(c)))
    return float(np.mean(vals)), float(np.std(vals, ddof=1))


def bootstrap_mean(values, b: int = 50, seed: int = 0) -> tuple[float, float]:
    """Bootstrap of the sample mean of per-shot values."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("no values")
    means = [np.random.default_rng([seed, i]).choice(values, values.size).mean() for i in range(b)]
    return float(np.mean(means)), float(np.std(means, ddof=1))


SINGLETON_THRESHOLD = 0.9


@dataclass(frozen=True)
class PmaxReport:
    p_max: float
    inv_shots: float
    max_count: int
    singleton_fraction: float
    mitigation_ineffective: bool

    def to_dict(self) -> dict:
        return {"p_max": self.p_max, "inv_shots": self.inv_shots, "max_count": self.max_count,
                "singleton_fraction": self.singleton_fraction,
                "mitigation_ineffective": self.mitigation_ineffective}


def pmax_diagnostic(counts: Counts, threshold: float = SINGLETON_THRESHOLD) -> PmaxReport:
    """Flag records whose most probable string is far below one count.

    The empirical signature is that almost every shot is a string seen
    once: flagged when at least ``threshold`` of the shots are singletons
    (always when every string is unique).
    """
    if counts.n_shots == 0:
        raise ValueError("no shots")
    m = max(counts.counts.values())
    single = sum(1 for v in counts.counts.values() if v == 1) / counts.n_shots
    return PmaxReport(m / counts.n_shots, 1.0 / counts.n_shots, m, single, m == 1 or single >= threshold)


def best_flag_subset(flags, size: int, score: Callable[[tuple], float]):
    """Exhaustive search for the size-``size`` subset of ``flags`` maximizing ``score``.

    Ties keep the lexicographically first subset.
    """
    best = None
    for sub in itertools.combinations(flags, size):
        v = score(sub)
        if best is None or v > best[1]:
            best = (sub, v)
    return best
