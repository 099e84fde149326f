"""Shot tallies over classical bit strings (bit 0 leftmost)."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Counts:
    counts: dict[str, int]
    n_shots: int
    bit_order: list = field(default_factory=list)
    roles: list = field(default_factory=list)

    def __post_init__(self):
        total = sum(self.counts.values())
        if total != self.n_shots:
            raise ValueError(f"tallies sum to {total}, expected {self.n_shots}")
        if not self.bit_order and self.counts:
            self.bit_order = list(range(len(next(iter(self.counts)))))

    @property
    def n_bits(self) -> int:
        return len(self.bit_order)

    def probabilities(self) -> dict[str, float]:
        if self.n_shots == 0:
            return {}
        return {k: v / self.n_shots for k, v in self.counts.items()}

    def marginal(self, positions) -> "Counts":
        positions = list(positions)
        out: dict[str, int] = {}
        for k, v in self.counts.items():
            key = "".join(k[i] for i in positions)
            out[key] = out.get(key, 0) + v
        return Counts(
            out, self.n_shots,
            [self.bit_order[i] for i in positions],
            [self.roles[i] for i in positions] if self.roles else [],
        )

    def to_dict(self) -> dict:
        return {
            "n_shots": self.n_shots,
            "bit_order": list(self.bit_order),
            "roles": list(self.roles),
            "counts": dict(sorted(self.counts.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "Counts":
        return cls({k: int(v) for k, v in d["counts"].items()}, int(d["n_shots"]),
                   list(d.get("bit_order", [])), list(d.get("roles", [])))

    @classmethod
    def from_records(cls, records: np.ndarray, bit_order=None, roles=None) -> "Counts":
        records = np.asarray(records, dtype=np.uint8)
        n_shots, n_bits = records.shape if records.ndim == 2 else (0, 0)
        if n_shots == 0:
            return cls({}, 0, list(bit_order or range(n_bits)), list(roles or []))
        rows, tallies = np.unique(records, axis=0, return_counts=True)
        chars = (rows + ord("0")).astype(np.uint8)
        counts = {bytes(r).decode(): int(c) for r, c in zip(chars, tallies)}
        return cls(counts, int(n_shots), list(bit_order or range(n_bits)), list(roles or []))

    @classmethod
    def from_probabilities(cls, probs: dict[str, float], n_shots: int, rng: np.random.Generator, **kw) -> "Counts":
        """Multinomial sample of ``n_shots`` from an exact distribution."""
        keys = sorted(probs)
        p = np.array([max(probs[k], 0.0) for k in keys])
        draws = rng.multinomial(n_shots, p / p.sum())
        return cls({k: int(c) for k, c in zip(keys, draws) if c}, n_shots, **kw)
