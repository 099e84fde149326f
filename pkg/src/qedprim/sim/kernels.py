"""In-place tensor kernels shared by the trajectory and exact engines.

Every kernel acts on one axis (or two) of an array whose listed axes
have length 2.  The trajectory engine passes a batch of kets with the
batch on axis 0; the density engine calls the same kernels on the row
axes and, conjugated, on the column axes.
"""
from __future__ import annotations

import numpy as np

SQ2 = 1 / np.sqrt(2)

MATRICES = {
    "I": np.eye(2, dtype=complex),
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * SQ2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "Sdg": np.array([[1, 0], [0, -1j]], dtype=complex),
}


def rz_matrix(angle: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])


def sl(ndim: int, *pairs) -> tuple:
    """Index tuple fixing ``(axis, value)`` pairs, full slices elsewhere."""
    idx = [slice(None)] * ndim
    for ax, val in pairs:
        idx[ax] = val
    return tuple(idx)


def apply_1q(arr: np.ndarray, axis: int, u: np.ndarray) -> None:
    nd = arr.ndim
    i0, i1 = sl(nd, (axis, 0)), sl(nd, (axis, 1))
    if u[0, 1] == 0 and u[1, 0] == 0:
        if u[0, 0] != 1:
            arr[i0] *= u[0, 0]
        if u[1, 1] != 1:
            arr[i1] *= u[1, 1]
        return
    if u[0, 0] == 0 and u[1, 1] == 0:
        a0 = arr[i0].copy()
        arr[i0] = arr[i1] * u[0, 1]
        arr[i1] = a0 * u[1, 0]
        return
    a0 = arr[i0].copy()
    a1 = arr[i1]
    arr[i0] = u[0, 0] * a0 + u[0, 1] * a1
    arr[i1] = u[1, 0] * a0 + u[1, 1] * a1


def apply_cnot(arr: np.ndarray, ac: int, at: int) -> None:
    nd = arr.ndim
    i10 = sl(nd, (ac, 1), (at, 0))
    i11 = sl(nd, (ac, 1), (at, 1))
    tmp = arr[i10].copy()
    arr[i10] = arr[i11]
    arr[i11] = tmp


def apply_swap(arr: np.ndarray, a: int, b: int) -> None:
    nd = arr.ndim
    i01 = sl(nd, (a, 0), (b, 1))
    i10 = sl(nd, (a, 1), (b, 0))
    tmp = arr[i01].copy()
    arr[i01] = arr[i10]
    arr[i10] = tmp


def apply_pauli_string(arr: np.ndarray, axes, paulis: str, conj: bool = False) -> None:
    for ax, p in zip(axes, paulis):
        if p != "I":
            u = MATRICES[p]
            apply_1q(arr, ax, u.conj() if conj else u)
