"""Noise model and shipped presets.

Preset magnitudes are synthetic.  They reproduce qualitative error
budgets (readout several times worse than two-qubit gates, bit-flip vs
dephasing dominated) and are not device calibrations.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, replace

import numpy as np

PAULI_SETS = {
    "depolarizing": (
        ("X", "Y", "Z"),
        tuple(a + b for a in "IXYZ" for b in "IXYZ" if a + b != "II"),
    ),
    "bitflip": (("X",), ("XI", "IX", "XX")),
    "dephasing": (("Z",), ("ZI", "IZ", "ZZ")),
}


@dataclass(frozen=True)
class NoiseModel:
    """Gate, idle, measurement and readout noise.

    ``p1``/``p2`` are Pauli-error probabilities after each one-/two-qubit
    gate; ``pauli`` selects which Paulis are drawn (uniformly).  A SWAP
    counts as three CNOTs.  ``gamma_idle`` is amplitude damping per qubit
    per two-qubit layer, ``gamma_meas`` damping right before a
    measurement.  ``eps01`` is P(read 0 | 1), ``eps10`` is P(read 1 | 0).
    ``coherent_z`` is an RZ over-rotation on every CNOT target, removed
    when ``suppression_on`` is set.
    """

    p1: float = 0.0
    p2: float = 0.0
    pauli: str = "depolarizing"
    gamma_idle: float = 0.0
    gamma_meas: float = 0.0
    eps01: float = 0.0
    eps10: float = 0.0
    coherent_z: float = 0.0
    suppression_on: bool = True
    name: str = "custom"

    def __post_init__(self):
        for f in ("p1", "p2", "gamma_idle", "gamma_meas", "eps01", "eps10"):
            v = getattr(self, f)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{f}={v} outside [0, 1]")
        if self.pauli not in PAULI_SETS:
            raise ValueError(f"unknown Pauli channel {self.pauli!r}")
        if not np.isfinite(self.coherent_z):
            raise ValueError("coherent_z must be finite")

    @property
    def effective_coherent_z(self) -> float:
        return 0.0 if self.suppression_on else self.coherent_z

    @property
    def is_noiseless(self) -> bool:
        return (
            self.p1 == self.p2 == self.gamma_idle == self.gamma_meas == self.eps01 == self.eps10 == 0.0
            and self.effective_coherent_z == 0.0
        )

    def with_(self, **kw) -> "NoiseModel":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseModel":
        return cls(**d)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:12]


NOISELESS = NoiseModel(name="noiseless")

PRESETS: dict[str, NoiseModel] = {
    "noiseless": NOISELESS,
    "bitflip": NoiseModel(p1=0.001, p2=0.01, pauli="bitflip", gamma_idle=0.004, name="bitflip"),
    "dephasing": NoiseModel(p1=0.001, p2=0.01, pauli="dephasing", name="dephasing"),
    # mean readout error 0.02 is 4x the two-qubit error
    "ibm-like": NoiseModel(
        p1=0.0005, p2=0.005, gamma_idle=0.002, gamma_meas=0.002,
        eps01=0.025, eps10=0.015, coherent_z=0.08, suppression_on=True, name="ibm-like",
    ),
    "suppression-off": NoiseModel(
        p1=0.0005, p2=0.005, gamma_idle=0.002, gamma_meas=0.002,
        eps01=0.025, eps10=0.015, coherent_z=0.08, suppression_on=False, name="suppression-off",
    ),
}


def get_preset(name: str) -> NoiseModel:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown noise preset {name!r}; choose from {sorted(PRESETS)}") from None
