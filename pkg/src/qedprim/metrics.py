"""Verification metrics: MQC, Hellinger, process certification, tomography."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .sim.counts import Counts
from .sim.exact import choi_from_superop

# -- distributions ---------------------------------------------------------


def as_distribution(data) -> dict[str, float]:
    """Normalized distribution from Counts or a mapping of string -> weight."""
    if isinstance(data, Counts):
        if data.n_shots == 0:
            raise ValueError("no shots")
        return data.probabilities()
    total = float(sum(data.values()))
    if total <= 0:
        raise ValueError("empty distribution")
    return {k: v / total for k, v in data.items()}


def _corner_probs(dist: dict[str, float]) -> tuple[float, float]:
    if not dist:
        raise ValueError("empty distribution")
    n = len(next(iter(dist)))
    return dist.get("0" * n, 0.0), dist.get("1" * n, 0.0)


def population(data) -> float:
    """p(all zeros) + p(all ones); 1 for an ideal GHZ state."""
    p0, p1 = _corner_probs(as_distribution(data))
    return p0 + p1


def population_halved(data) -> float:
    """Half of :func:`population` (the alternative normalization)."""
    return 0.5 * population(data)


def ghz_distribution(n: int) -> dict[str, float]:
    return {"0" * n: 0.5, "1" * n: 0.5}


def hellinger_fidelity(p: dict[str, float], q: dict[str, float], atol: float = 1e-9) -> float:
    """(sum_i sqrt(p_i q_i))**2 for normalized distributions."""
    for name, d in (("p", p), ("q", q)):
        if abs(sum(d.values()) - 1.0) > atol:
            raise ValueError(f"{name} is not normalized")
    bc = sum(np.sqrt(max(p[k], 0.0) * max(q.get(k, 0.0), 0.0)) for k in p)
    return float(bc ** 2)


# -- multiple-quantum coherence -----------------------------------------------


def nyquist_phases(n: int) -> np.ndarray:
    """The 2n+2 phases pi*j/(n+1)."""
    return np.pi * np.arange(2 * n + 2) / (n + 1)


@dataclass(frozen=True)
class ParityOscillation:
    phases: tuple[float, ...]
    values: tuple[float, ...]
    n: int

    def __post_init__(self):
        object.__setattr__(self, "phases", tuple(float(x) for x in self.phases))
        object.__setattr__(self, "values", tuple(float(x) for x in self.values))
        if len(self.values) != 2 * self.n + 2 or len(self.phases) != 2 * self.n + 2:
            raise ValueError(f"expected {2 * self.n + 2} samples for n={self.n}")
        if not np.allclose(self.phases, nyquist_phases(self.n), atol=1e-12):
            raise ValueError("phases must be pi*j/(n+1)")

    @classmethod
    def from_values(cls, values, n: int) -> "ParityOscillation":
        return cls(tuple(nyquist_phases(n)), tuple(values), n)


def fourier_modes(osc: ParityOscillation) -> dict[int, float]:
    """I_q = Re(sum_j exp(i q phi_j) S_j) / (2n+2) for q in [-n, n]."""
    phi = np.asarray(osc.phases)
    s = np.asarray(osc.values)
    m = 2 * osc.n + 2
    return {q: float(np.real(np.sum(np.exp(1j * q * phi) * s)) / m) for q in range(-osc.n, osc.n + 1)}


def coherence(osc: ParityOscillation) -> tuple[float, dict[int, float]]:
    """C = 2 sqrt(max(I_n, 0)) and all Fourier modes."""
    modes = fourier_modes(osc)
    return 2.0 * float(np.sqrt(max(modes[osc.n], 0.0))), modes


def mqc_fidelity(c: float, p: float) -> tuple[float, bool]:
    """F = (C + P) / 2 and whether F > 0.5 (genuine multipartite entanglement)."""
    f = 0.5 * (c + p)
    return f, bool(f > 0.5)


@dataclass
class MqcResult:
    coherence: float
    population: float
    fidelity: float
    gme: bool
    fourier_modes: dict[int, float]
    raw_mode_n: float
    hellinger: float | None = None

    def to_dict(self) -> dict:
        return {
            "C": self.coherence, "P": self.population, "F": self.fidelity, "gme": self.gme,
            "I_n_raw": self.raw_mode_n, "H_F": self.hellinger,
            "fourier_modes": {str(q): v for q, v in sorted(self.fourier_modes.items())},
        }


def mqc_result(signal, pop_dist, n: int) -> MqcResult:
    """MQC summary from the 2n+2 all-zero probabilities and the population distribution."""
    osc = signal if isinstance(signal, ParityOscillation) else ParityOscillation.from_values(signal, n)
    c, modes = coherence(osc)
    dist = as_distribution(pop_dist)
    p = population(dist)
    f, gme = mqc_fidelity(c, p)
    hf = hellinger_fidelity(dist, ghz_distribution(n))
    return MqcResult(c, p, f, gme, modes, modes[n], hf)


def all_zero_probability(data) -> float:
    dist = as_distribution(data)
    n = len(next(iter(dist)))
    return dist.get("0" * n, 0.0)


# -- Pauli algebra and process certification ---------------------------------

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
CNOT_MATRIX = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def pauli_matrix(label: str) -> np.ndarray:
    """Tensor product, first character most significant."""
    out = np.ones((1, 1), dtype=complex)
    for ch in label:
        out = np.kron(out, PAULI[ch])
    return out


def pauli_labels(n_qubits: int) -> list[str]:
    return ["".join(p) for p in itertools.product("IXYZ", repeat=n_qubits)]


def choi_state(u: np.ndarray) -> np.ndarray:
    """(1/d) sum_ij |i><j| (x) U|i><j|U^dag, reference register first."""
    d = u.shape[0]
    vec = np.zeros(d * d, dtype=complex)
    for i in range(d):
        vec += np.kron(np.eye(d)[i], u[:, i])
    vec /= np.sqrt(d)
    return np.outer(vec, vec.conj())


def choi_pauli_coefficients(choi: np.ndarray, n_qubits: int = 2) -> dict[tuple[str, str], float]:
    """Tr[(P_in (x) P_out) choi] over all Pauli pairs."""
    out = {}
    for a in pauli_labels(n_qubits):
        pa = pauli_matrix(a)
        for b in pauli_labels(n_qubits):
            out[(a, b)] = float(np.real(np.trace(np.kron(pa, pauli_matrix(b)) @ choi)))
    return out


@dataclass(frozen=True)
class PauliTerm:
    """Input Pauli (whose conjugate is prepared) and measured output Pauli."""

    p_in: str
    p_out: str
    sign: int


def nonvanishing_terms(u: np.ndarray = CNOT_MATRIX, tol: float = 1e-9) -> list[PauliTerm]:
    """Pauli pairs with non-zero Choi coefficient; sign is the coefficient's sign."""
    coeffs = choi_pauli_coefficients(choi_state(u), int(np.log2(u.shape[0])))
    return [PauliTerm(a, b, int(np.sign(v))) for (a, b), v in coeffs.items() if abs(v) > tol]


def cnot_terms() -> list[PauliTerm]:
    """The 16 (input, output) pairs for the ideal CNOT by Heisenberg propagation.

    Input P maps to U P* U^dag; with real U the conjugate only flips the
    sign of each Y factor.
    """
    out = []
    for a in pauli_labels(2):
        conj_sign = (-1) ** a.count("Y")
        m = CNOT_MATRIX @ pauli_matrix(a) @ CNOT_MATRIX.conj().T * conj_sign
        for b in pauli_labels(2):
            ov = np.trace(pauli_matrix(b) @ m).real / 4
            if abs(ov) > 0.5:
                out.append(PauliTerm(a, b, int(np.sign(ov))))
    return out


@dataclass
class GateFidelityResult:
    f_process: float
    f_gate: float
    terms: list[dict] = field(default_factory=list)
    f_process_raw: float = 0.0
    f_gate_raw: float = 0.0

    def to_dict(self) -> dict:
        return {"F_process": self.f_process, "F_gate": self.f_gate, "F_process_raw": self.f_process_raw,
                "F_gate_raw": self.f_gate_raw, "terms": self.terms}


def gate_fidelity(term_values, terms=None, d: int = 4) -> GateFidelityResult:
    """Process and average gate fidelity from the 16 signed term estimates.

    ``term_values`` maps PauliTerm (or (p_in, p_out)) -> estimated Choi
    coefficient.  Reported fidelities are clipped to [0, 1]; raw values are
    kept alongside.
    """
    terms = list(terms or cnot_terms())
    vals = {}
    for k, v in dict(term_values).items():
        key = (k.p_in, k.p_out) if isinstance(k, PauliTerm) else tuple(k)
        vals[key] = float(v)
    missing = [t for t in terms if (t.p_in, t.p_out) not in vals]
    if missing:
        raise ValueError(f"missing {len(missing)} term estimate(s)")
    fp = sum(t.sign * vals[(t.p_in, t.p_out)] for t in terms) / (d * d)
    fg = (d * fp + 1) / (d + 1)
    rows = [{"p_in": t.p_in, "p_out": t.p_out, "sign": t.sign, "value": vals[(t.p_in, t.p_out)]} for t in terms]
    clip = lambda x: min(max(x, 0.0), 1.0)  # noqa: E731
    return GateFidelityResult(clip(fp), clip(fg), rows, fp, fg)


def process_fidelity_from_superop(lam: np.ndarray, u: np.ndarray = CNOT_MATRIX) -> float:
    """Tr(choi_ideal choi_actual) for a superoperator ``lam[i, j] = L(|i><j|)``."""
    return float(np.real(np.trace(choi_state(u) @ choi_from_superop(lam))))


# -- states and tomography ---------------------------------------------------

BELL_PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=complex))

    @property
    def n_qubits(self) -> int:
        return int(np.log2(self.matrix.shape[0]))

    def check(self, herm_tol=1e-10, trace_tol=1e-10, psd_tol=-1e-8) -> None:
        m = self.matrix
        if np.abs(m - m.conj().T).max() > herm_tol:
            raise ValueError("not Hermitian")
        if abs(np.trace(m).real - 1) > trace_tol:
            raise ValueError("trace differs from 1")
        if np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min() < psd_tol:
            raise ValueError("not positive semidefinite")

    def fidelity_pure(self, psi: np.ndarray) -> float:
        return float(np.real(psi.conj() @ self.matrix @ psi))

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def to_list(self) -> list:
        return [[[float(z.real), float(z.imag)] for z in row] for row in self.matrix]


def werner_state(p: float) -> np.ndarray:
    return p * np.outer(BELL_PHI_PLUS, BELL_PHI_PLUS.conj()) + (1 - p) * np.eye(4) / 4


def project_psd(m: np.ndarray) -> np.ndarray:
    """Hermitize, zero the negative eigenvalues, rescale to unit trace."""
    h = 0.5 * (m + m.conj().T)
    w, v = np.linalg.eigh(h)
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0:
        raise ValueError("no positive spectrum to project onto")
    w /= w.sum()
    return (v * w) @ v.conj().T


def concurrence(rho: np.ndarray) -> float:
    """Two-qubit concurrence max(0, l1 - l2 - l3 - l4)."""
    yy = np.kron(PAULI["Y"], PAULI["Y"])
    tilde = yy @ rho.conj() @ yy
    ev = np.linalg.eigvals(rho @ tilde)
    lam = np.sort(np.sqrt(np.clip(ev.real, 0.0, None)))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


TOMOGRAPHY_BASES = tuple(a + b for a in "XYZ" for b in "XYZ")


def basis_distribution(rho: np.ndarray, basis: str) -> dict[str, float]:
    """Outcome distribution of measuring each qubit in ``basis`` (bit 0 = first qubit)."""
    rot = {"Z": np.eye(2), "X": np.array([[1, 1], [1, -1]]) / np.sqrt(2),
           "Y": np.array([[1, 1], [1, -1]]) / np.sqrt(2) @ np.diag([1, -1j])}
    u = np.ones((1, 1), dtype=complex)
    for ch in basis:
        u = np.kron(u, rot[ch])
    diag = np.real(np.diag(u @ rho @ u.conj().T))
    n = len(basis)
    return {format(i, f"0{n}b"): float(max(diag[i], 0.0)) for i in range(2 ** n)}


def _parity_expectation(dist: dict[str, float], positions) -> float:
    return sum(p * (-1) ** sum(int(k[i]) for i in positions) for k, p in dist.items())


@dataclass
class TomographyResult:
    rho: DensityMatrix
    rho_linear: np.ndarray
    fidelity: float
    purity: float
    concurrence: float

    def to_dict(self) -> dict:
        return {"fidelity": self.fidelity, "purity": self.purity, "concurrence": self.concurrence,
                "rho": self.rho.to_list()}


def pauli_expectations_from_bases(dists: dict[str, dict[str, float]]) -> dict[str, float]:
    """All 16 two-qubit Pauli expectations, averaging marginals over every basis that fixes them."""
    out = {"II": 1.0}
    for label in pauli_labels(2)[1:]:
        vals = []
        for basis, dist in dists.items():
            if all(l == "I" or l == b for l, b in zip(label, basis)):
                vals.append(_parity_expectation(dist, [i for i, l in enumerate(label) if l != "I"]))
        if not vals:
            raise ValueError(f"no basis determines {label}")
        out[label] = float(np.mean(vals))
    return out


def tomography(counts_by_basis, target: np.ndarray = BELL_PHI_PLUS) -> TomographyResult:
    """Linear-inversion two-qubit tomography with PSD projection."""
    dists = {}
    for basis in TOMOGRAPHY_BASES:
        if basis not in counts_by_basis:
            raise ValueError(f"missing basis {basis}")
        c = counts_by_basis[basis]
        if isinstance(c, Counts) and c.n_shots == 0:
            raise ValueError(f"no shots in basis {basis}")
        dists[basis] = as_distribution(c)
    ex = pauli_expectations_from_bases(dists)
    lin = sum(ex[l] * pauli_matrix(l) for l in ex) / 4
    rho = project_psd(lin)
    dm = DensityMatrix(rho)
    return TomographyResult(dm, lin, dm.fidelity_pure(target), dm.purity(), concurrence(rho))
