"""State-preparation circuits ``U_S`` with ``U_S|0...0> = |F>``.

Qubit layout for permutations: qubit ``r*n + c`` is "city ``c`` at position
``r``".  While rows are being filled, the last row doubles as a bitmask of
still-unused columns (1 = unused); after the final update it holds the last
city.  Dicke states and the weight-class map are applied by formula through
the ``DICKE`` primitive of :mod:`gmqaoa.fullsim`.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from math import comb

import numpy as np

from . import fullsim
from .fullsim import (Circuit, ControlledNot, ControlledRotY, ControlledSwap, CyclicShift,
                      DickeMap, FullState, MultiToffoli, PauliX, RotY)
from .problems import (PortfolioInstance, TspInstance, kvc_feasible, KvcInstance,
                       portfolio_band_sizes, portfolio_feasible, tsp_feasible)
from .substate import FeasibleSet

DICKE_MAX_N = 22
PERMUTATION_MAX_N = 4


class PrepMethod(str, Enum):
    DICKE_FORMULA = "dicke"
    W_CIRCUIT = "w"
    PERMUTATION_CIRCUIT = "permutation"
    ALTERNATING_CIRCUIT = "alternating"
    PORTFOLIO_BAND_CIRCUIT = "portfolio"


@dataclass
class PrepSpec:
    """A feasible set together with the circuit that prepares ``|F>``.

    ``circuit.num_qubits`` may exceed ``target.num_qubits`` when the circuit
    uses ancillas; those sit above the problem qubits and end in ``|0>``.
    """

    target: FeasibleSet
    method: PrepMethod
    circuit: Circuit

    @property
    def num_qubits(self) -> int:
        return self.circuit.num_qubits

    def prepare(self) -> FullState:
        return fullsim.run(self.circuit)


def normalize_global_phase(state: FullState, atol: float = 1e-12) -> tuple[FullState, float]:
    """Rotate so the first nonzero amplitude is real positive; returns the removed phase."""
    nz = np.flatnonzero(np.abs(state.amp) > atol)
    if nz.size == 0:
        return state.copy(), 0.0
    phase = float(np.angle(state.amp[nz[0]]))
    return FullState(state.num_qubits, state.amp * np.exp(-1j * phase)), phase


def uniform_superposition_vector(num_qubits: int, members) -> np.ndarray:
    vec = np.zeros(1 << num_qubits, dtype=complex)
    members = np.asarray(members, dtype=np.int64)
    vec[members] = 1.0 / np.sqrt(members.size)
    return vec


# -- Dicke and W states ------------------------------------------------------

def dicke_state(n: int, k: int) -> FullState:
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got n={n}, k={k}")
    if n > DICKE_MAX_N:
        raise fullsim.CapExceededError(f"dicke_state is capped at n <= {DICKE_MAX_N}")
    idx = np.arange(1 << n)
    weight = np.zeros(idx.size, dtype=np.int64)
    for q in range(n):
        weight += (idx >> q) & 1
    amp = np.where(weight == k, 1.0 / np.sqrt(comb(n, k)), 0.0).astype(complex)
    return FullState(n, amp)


def dicke_prep_circuit(n: int, k: int, qubits=None) -> Circuit:
    """``X`` on the first ``k`` qubits, then the weight-class map."""
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got n={n}, k={k}")
    qubits = list(range(n)) if qubits is None else list(qubits)
    circ = Circuit(max(qubits) + 1)
    circ.extend(PauliX(q) for q in qubits[:k])
    circ.append(DickeMap(qubits))
    return circ


def w_state_gates(qubits, controls=()) -> list:
    """Gates for ``W_m`` on ``qubits``: a PauliX, then a cascade moving the excitation.

    The excitation starts on ``qubits[0]``; step ``i`` splits off amplitude
    ``1/sqrt(m - i + 1)`` of what remains onto ``qubits[i]``.
    """
    qubits = list(qubits)
    if not qubits:
        raise ValueError("W state needs at least one qubit")
    q0 = qubits[0]
    gates = [MultiToffoli(controls, q0) if controls else PauliX(q0)]
    n = len(qubits)
    for i in range(1, n):
        m = n - i + 1
        theta = 2 * np.arccos(np.sqrt((m - 1) / m))
        gates.append(ControlledRotY((q0,) + tuple(controls), qubits[i], theta))
        gates.append(ControlledNot(qubits[i], q0) if not controls
                     else MultiToffoli((qubits[i],) + tuple(controls), q0))
    return gates


def w_state_circuit(qubits) -> Circuit:
    qubits = list(qubits)
    circ = Circuit(max(qubits) + 1)
    circ.extend(w_state_gates(qubits))
    return circ


# -- permutations -----------------------------------------------------------

def _check_perm_n(n: int, lo: int = 2) -> None:
    if not lo <= n <= PERMUTATION_MAX_N:
        raise ValueError(f"permutation circuits support {lo} <= n <= {PERMUTATION_MAX_N}, got {n}")


def _mask(n: int, i: int) -> int:
    return (n - 1) * n + i


def _bitmask_update(n: int, r: int) -> list:
    return [ControlledNot(r * n + i, _mask(n, i)) for i in range(n)]


def _first_row(n: int, fixed_first_city: bool) -> list:
    gates = [PauliX(0)] if fixed_first_city else w_state_gates(range(n))
    gates += [PauliX(_mask(n, i)) for i in range(n)]
    return gates + _bitmask_update(n, 0)


def _middle_row(n: int, r: int) -> list:
    """Fill row ``r`` by swapping a W state out of row ``k = r + 1`` column by column."""
    k = r + 1
    width = n - k + 1
    register = [k * n + j for j in range(n - width, n)]
    last = (k + 1) * n - 1
    gates = w_state_gates(register)
    for i in range(n):
        gates.append(ControlledSwap([_mask(n, i)], last, r * n + i))
        gates.append(CyclicShift(register, [_mask(n, i)], 1))
    return gates + _bitmask_update(n, r)


def _second_last_row(n: int) -> list:
    r = n - 2
    gates = []
    for a in range(n):
        for b in range(a + 1, n):
            ma, mb = _mask(n, a), _mask(n, b)
            xa, xb = r * n + a, r * n + b
            gates += [MultiToffoli([ma, mb], xa),
                      ControlledRotY([ma, mb], xb, np.pi / 2),
                      MultiToffoli([ma, mb, xb], xa)]
    return gates


def permutation_circuit(n: int, fixed_first_city: bool = False) -> Circuit:
    """Uniform superposition over all ``n x n`` permutation matrices on ``n**2`` qubits."""
    _check_perm_n(n)
    circ = Circuit(n * n)
    circ.extend(_first_row(n, fixed_first_city))
    for r in range(1, n - 2):
        circ.extend(_middle_row(n, r))
    if n >= 3:
        circ.extend(_second_last_row(n))
        circ.extend(_bitmask_update(n, n - 2))
    return circ


def _parity_of_row(n: int, r: int, anc: int) -> list:
    # cities still unused after row r that are smaller than the one placed in row r
    return [MultiToffoli([r * n + c, _mask(n, c2)], anc)
            for c in range(n) for c2 in range(c)]


def alternating_circuit(n: int) -> Circuit:
    """Uniform superposition over even permutations; one parity ancilla at qubit ``n**2``."""
    _check_perm_n(n, lo=3)
    anc = n * n
    circ = Circuit(n * n + 1)
    circ.extend(_first_row(n, False))
    circ.extend(_parity_of_row(n, 0, anc))
    for r in range(1, n - 2):
        circ.extend(_middle_row(n, r))
        circ.extend(_parity_of_row(n, r, anc))
    r = n - 2
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    for a, b in pairs:
        ma, mb = _mask(n, a), _mask(n, b)
        # even so far -> the smaller remaining city goes first, odd -> the larger
        circ.extend([PauliX(anc), MultiToffoli([ma, mb, anc], r * n + a), PauliX(anc),
                     MultiToffoli([ma, mb, anc], r * n + b)])
    for a, b in pairs:
        circ.append(MultiToffoli([_mask(n, a), _mask(n, b), r * n + b], anc))
    circ.extend(_bitmask_update(n, r))
    return circ


def inversion_count(order) -> int:
    order = list(order)
    return sum(1 for i in range(len(order)) for j in range(i + 1, len(order)) if order[i] > order[j])


def alternating_feasible(n: int) -> FeasibleSet:
    from itertools import permutations

    from .problems import encode_permutation

    even = (encode_permutation(p) for p in permutations(range(n)) if inversion_count(p) % 2 == 0)
    return FeasibleSet.from_bitstrings(n * n, even)


# -- portfolio bands ---------------------------------------------------------

def band_rotation_angles(n: int, d: int) -> list[float]:
    """RY angles of the stair on the short register.

    Angle ``j`` leaves short bit ``j`` at 0 (band ``j``) with probability
    ``w_j / (W - w_0 - ... - w_{j-1})``.
    """
    w = portfolio_band_sizes(n, d)
    remaining = float(sum(w))
    angles = []
    for j in range(len(w) - 1):
        stay = w[j] / remaining
        angles.append(2 * np.arccos(np.sqrt(stay)))
        remaining -= w[j]
    return angles


def portfolio_band_circuit(n: int, d: int) -> Circuit:
    """Short register on qubits ``0..n-1``, long register on ``n..2n-1``."""
    if not 0 <= d <= n:
        raise ValueError(f"need 0 <= d <= n, got n={n}, d={d}")
    short = list(range(n))
    long_ = list(range(n, 2 * n))
    circ = Circuit(2 * n)
    for j, theta in enumerate(band_rotation_angles(n, d)):
        circ.append(RotY(short[0], theta) if j == 0 else ControlledRotY([short[j - 1]], short[j], theta))
    circ.extend(PauliX(long_[i]) for i in range(d))
    circ.extend(ControlledNot(short[j], long_[d + j]) for j in range(n - d))
    circ.append(DickeMap(short))
    circ.append(DickeMap(long_))
    return circ


# -- specs per problem ---------------------------------------------------------

def prep_for(inst, fset: FeasibleSet | None = None) -> PrepSpec:
    """Gate-level preparation of the uniform feasible superposition for an instance."""
    if isinstance(inst, KvcInstance):
        fset = fset or kvc_feasible(inst)
        method = PrepMethod.W_CIRCUIT if inst.k == 1 else PrepMethod.DICKE_FORMULA
        circ = w_state_circuit(range(inst.n)) if inst.k == 1 else dicke_prep_circuit(inst.n, inst.k)
        return PrepSpec(fset, method, circ)
    if isinstance(inst, TspInstance):
        fset = fset or tsp_feasible(inst)
        return PrepSpec(fset, PrepMethod.PERMUTATION_CIRCUIT,
                        permutation_circuit(inst.n, inst.fixed_first_city))
    if isinstance(inst, PortfolioInstance):
        fset = fset or portfolio_feasible(inst)
        return PrepSpec(fset, PrepMethod.PORTFOLIO_BAND_CIRCUIT, portfolio_band_circuit(inst.n, inst.d))
    raise TypeError(f"unsupported instance type {type(inst).__name__}")
