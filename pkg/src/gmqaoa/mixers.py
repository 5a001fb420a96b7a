"""Mixer catalogue restricted to a feasible subspace: Grover, XY-ring, XY-clique.

XY entries keep the literal value of ``X_i X_j + Y_i Y_j`` on a connected pair,
which is 2 per term.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .substate import FeasibleSet, SubspaceState

RESTRICTED_MAX = 4096
FULL_XY_MAX_QUBITS = 10


class RestrictedCapError(ValueError):
    pass


@dataclass(eq=False)
class RestrictedHamiltonian:
    set: FeasibleSet
    matrix: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        m = len(self.set)
        if self.matrix.shape != (m, m):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match |F|={m}")

    def support(self) -> np.ndarray:
        return self.matrix != 0


def _check_cap(fset: FeasibleSet) -> None:
    if len(fset) > RESTRICTED_MAX:
        raise RestrictedCapError(f"|F|={len(fset)} exceeds the restricted-matrix cap {RESTRICTED_MAX}")


def popcount_array(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64).copy()
    out = np.zeros_like(x)
    while np.any(x):
        out += x & 1
        x >>= 1
    return out


def gm_restricted(fset: FeasibleSet) -> RestrictedHamiltonian:
    _check_cap(fset)
    m = len(fset)
    return RestrictedHamiltonian(fset, np.full((m, m), 1.0 / m), "gm")


def ring_edges(n: int) -> list[tuple[int, int]]:
    """Terms ``(i, i+1 mod n)`` for ``i = 0..n-1``; for ``n = 2`` the edge appears twice."""
    if n < 2:
        return []
    return [(i, (i + 1) % n) for i in range(n)]


def clique_edges(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def _xy_restricted(fset: FeasibleSet, edges, name: str) -> RestrictedHamiltonian:
    _check_cap(fset)
    m = len(fset)
    mat = np.zeros((m, m))
    for i, x in enumerate(fset.members):
        x = int(x)
        for a, b in edges:
            # X_a X_b + Y_a Y_b swaps differing bits a, b with amplitude 2
            if ((x >> a) ^ (x >> b)) & 1:
                y = x ^ ((1 << a) | (1 << b))
                j = fset.index_of.get(y)
                if j is not None:
                    mat[i, j] += 2.0
    return RestrictedHamiltonian(fset, mat, name)


def xy_ring_restricted(fset: FeasibleSet) -> RestrictedHamiltonian:
    return _xy_restricted(fset, ring_edges(fset.num_qubits), "xy_ring")


def xy_clique_restricted(fset: FeasibleSet) -> RestrictedHamiltonian:
    return _xy_restricted(fset, clique_edges(fset.num_qubits), "xy_clique")


# -- full-space Hamiltonians, used to check the restrictions ---------------

_PAULI = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
}


def pauli_string(n: int, ops: dict[int, str]) -> np.ndarray:
    # Kronecker order: qubit n-1 leftmost so qubit 0 is the least significant bit
    return reduce(np.kron, [_PAULI[ops.get(q, "I")] for q in reversed(range(n))])


def full_xy_hamiltonian(n: int, edges) -> np.ndarray:
    if n > FULL_XY_MAX_QUBITS:
        raise RestrictedCapError(f"full XY Hamiltonian limited to {FULL_XY_MAX_QUBITS} qubits")
    h = np.zeros((1 << n, 1 << n), dtype=complex)
    for a, b in edges:
        h += pauli_string(n, {a: "X", b: "X"}) + pauli_string(n, {a: "Y", b: "Y"})
    return h


def restrict(full: np.ndarray, fset: FeasibleSet) -> np.ndarray:
    idx = fset.members
    return full[np.ix_(idx, idx)]


# -- evolution ----------------------------------------------------------------

def restricted_exponential(h: RestrictedHamiltonian, beta: float) -> np.ndarray:
    mat = h.matrix
    if not np.allclose(mat, mat.T, atol=1e-12, rtol=0):
        raise ValueError("restricted Hamiltonian is not symmetric")
    w, v = np.linalg.eigh(mat)
    return (v * np.exp(-1j * beta * w)) @ v.conj().T


def apply_restricted_exponential(state: SubspaceState, h: RestrictedHamiltonian, beta: float) -> SubspaceState:
    if state.set is not h.set and not np.array_equal(state.set.members, h.set.members):
        raise ValueError("state and Hamiltonian live on different feasible sets")
    _check_cap(h.set)
    return SubspaceState(state.set, restricted_exponential(h, beta) @ state.amp)


def bubble_sort_distance(x: int, y: int, n: int | None = None) -> int:
    """Minimum number of adjacent (non-cyclic) transpositions turning ``x`` into ``y``."""
    x, y = int(x), int(y)
    if bin(x).count("1") != bin(y).count("1"):
        raise ValueError(f"Hamming weights differ: {x:b} vs {y:b}")
    if n is not None and max(x, y) >= (1 << n):
        raise ValueError(f"bitstrings do not fit in {n} bits")
    ones_x = [q for q in range(max(x.bit_length(), 1)) if (x >> q) & 1]
    ones_y = [q for q in range(max(y.bit_length(), 1)) if (y >> q) & 1]
    # the i-th set bit of x travels to the i-th set bit of y
    return sum(abs(a - b) for a, b in zip(ones_x, ones_y))


def hamming_distance(x: int, y: int) -> int:
    return bin(int(x) ^ int(y)).count("1")


def support_chain_holds(fset: FeasibleSet) -> bool:
    ring = xy_ring_restricted(fset).support()
    clique = xy_clique_restricted(fset).support()
    gm = gm_restricted(fset).support()
    return bool(np.all(~ring | clique) and np.all(~clique | gm))
