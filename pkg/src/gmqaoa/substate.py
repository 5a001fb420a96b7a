"""Exact GM-QAOA evolution restricted to the feasible subspace.

A state is a complex amplitude vector indexed by the members of a
:class:`FeasibleSet`; basis states outside the set carry amplitude zero by
construction.  The Grover mixer ``exp(-i beta |F><F|)`` acts as the rank-1
update ``amp - (1 - e^{-i beta}) * mean(amp)``, so one round costs O(|F|).

Bit convention: a bitstring is an integer whose bit ``q`` is qubit ``q``.
"""
from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

NORM_TOL = 1e-9
DRIFT_WARN_TOL = 1e-6


class FeasibleSetError(ValueError):
    pass


class MismatchedSetError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FeasibleSet:
    """Sorted, duplicate-free collection of feasible basis states."""

    num_qubits: int
    members: np.ndarray
    index_of: dict[int, int] = field(repr=False)

    @classmethod
    def from_bitstrings(cls, num_qubits: int, bits: Iterable[int]) -> "FeasibleSet":
        arr = np.unique(np.fromiter((int(b) for b in bits), dtype=np.int64))
        if arr.size == 0:
            raise FeasibleSetError("feasible set is empty")
        if num_qubits < 0 or num_qubits > 62:
            raise FeasibleSetError(f"unsupported qubit count {num_qubits}")
        if arr[0] < 0 or int(arr[-1]) >= (1 << num_qubits):
            raise FeasibleSetError(f"member out of range for {num_qubits} qubits")
        arr.setflags(write=False)
        return cls(num_qubits, arr, {int(x): i for i, x in enumerate(arr)})

    def __len__(self) -> int:
        return int(self.members.size)

    def __contains__(self, x: int) -> bool:
        return int(x) in self.index_of

    def bitstring(self, i: int) -> str:
        """Member ``i`` written most-significant qubit first (``x_{n-1}...x_0``)."""
        return format(int(self.members[i]), f"0{self.num_qubits}b")


@dataclass(eq=False)
class SubspaceState:
    set: FeasibleSet
    amp: np.ndarray

    def copy(self) -> "SubspaceState":
        return SubspaceState(self.set, self.amp.copy())

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amp, self.amp).real))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amp) ** 2

    def embed(self) -> np.ndarray:
        """Amplitudes scattered into the full ``2**num_qubits`` vector."""
        full = np.zeros(1 << self.set.num_qubits, dtype=complex)
        full[self.set.members] = self.amp
        return full


@dataclass(eq=False)
class CostTable:
    set: FeasibleSet
    value: np.ndarray

    def __post_init__(self):
        self.value = np.asarray(self.value, dtype=float)
        if self.value.shape != (len(self.set),):
            raise ValueError(
                f"cost table has {self.value.size} entries for {len(self.set)} members")
        if not np.all(np.isfinite(self.value)):
            raise ValueError("cost values must be finite")

    @classmethod
    def from_function(cls, fset: FeasibleSet, cost) -> "CostTable":
        return cls(fset, np.array([cost(int(x)) for x in fset.members], dtype=float))


@dataclass(frozen=True)
class AngleSchedule:
    """Angles (gamma_1, beta_1, ..., gamma_p, beta_p) in radians."""

    gamma: tuple[float, ...]
    beta: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "gamma", tuple(float(g) for g in self.gamma))
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if len(self.gamma) != len(self.beta):
            raise ValueError(
                f"gamma has {len(self.gamma)} angles but beta has {len(self.beta)}")
        if not all(np.isfinite(self.gamma + self.beta)):
            raise ValueError("angles must be finite")

    @property
    def p(self) -> int:
        return len(self.gamma)

    @classmethod
    def from_vector(cls, vec: Sequence[float]) -> "AngleSchedule":
        """Inverse of :meth:`as_vector` (interleaved gamma/beta)."""
        vec = list(vec)
        if len(vec) % 2:
            raise ValueError("angle vector must have even length")
        return cls(tuple(vec[0::2]), tuple(vec[1::2]))

    def as_vector(self) -> np.ndarray:
        out = np.empty(2 * self.p)
        out[0::2] = self.gamma
        out[1::2] = self.beta
        return out

    def extended(self, gamma: float = 0.0, beta: float = 0.0) -> "AngleSchedule":
        return AngleSchedule(self.gamma + (gamma,), self.beta + (beta,))

    @classmethod
    def random(cls, p: int, rng: np.random.Generator) -> "AngleSchedule":
        g = rng.uniform(0, 2 * np.pi, size=p)
        b = rng.uniform(0, 2 * np.pi, size=p)
        return cls(tuple(g), tuple(b))


def _same_set(a: FeasibleSet, b: FeasibleSet) -> None:
    if a is b:
        return
    if a.num_qubits != b.num_qubits or not np.array_equal(a.members, b.members):
        raise MismatchedSetError("state and cost table are defined on different feasible sets")


def uniform_state(fset: FeasibleSet) -> SubspaceState:
    m = len(fset)
    if m == 0:
        raise FeasibleSetError("cannot build a uniform state over an empty set")
    return SubspaceState(fset, np.full(m, 1.0 / np.sqrt(m), dtype=complex))


def apply_phase_separator(state: SubspaceState, costs: CostTable, gamma: float) -> SubspaceState:
    _same_set(state.set, costs.set)
    return SubspaceState(state.set, np.exp(-1j * gamma * costs.value) * state.amp)


def apply_grover_mixer(state: SubspaceState, beta: float) -> SubspaceState:
    """Apply ``Id - (1 - e^{-i beta}) |F><F|`` as a rank-1 update."""
    amp = state.amp
    m = amp.size
    # s / sqrt(|F|) == arithmetic mean of the amplitudes
    mean = amp.sum() / m
    out = amp - (1.0 - np.exp(-1j * beta)) * mean
    new = SubspaceState(state.set, out)
    drift = abs(new.norm - 1.0)
    if drift > DRIFT_WARN_TOL:
        logger.warning("norm drift %.3e after Grover mixer", drift)
    return new


def run_schedule(fset: FeasibleSet, costs: CostTable, angles: AngleSchedule) -> SubspaceState:
    if len(angles.gamma) != len(angles.beta):
        raise ValueError("angle schedule length mismatch")
    state = uniform_state(fset)
    for g, b in zip(angles.gamma, angles.beta):
        state = apply_grover_mixer(apply_phase_separator(state, costs, g), b)
    return state


def expectation(state: SubspaceState, costs: CostTable) -> float:
    _same_set(state.set, costs.set)
    return float(np.dot(state.probabilities(), costs.value))


def optimal_mask(costs: CostTable, sense: str = "max", atol: float = 1e-12) -> np.ndarray:
    if sense not in ("min", "max"):
        raise ValueError(f"sense must be 'min' or 'max', got {sense!r}")
    best = costs.value.max() if sense == "max" else costs.value.min()
    return np.abs(costs.value - best) <= atol


def optimum_probability(state: SubspaceState, costs: CostTable, sense: str = "max") -> float:
    _same_set(state.set, costs.set)
    return float(state.probabilities()[optimal_mask(costs, sense)].sum())


def sample(state: SubspaceState, rng_seed: int, shots: int) -> dict[str, int]:
    """Multinomial measurement record keyed by bitstring (``x_{n-1}...x_0``)."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = state.probabilities()
    probs = probs / probs.sum()
    counts = np.random.default_rng(rng_seed).multinomial(shots, probs)
    return {state.set.bitstring(i): int(c) for i, c in enumerate(counts) if c}


# -- batched evaluation used by the optimizer ------------------------------

def run_schedule_batch(costs: CostTable, gammas: np.ndarray, betas: np.ndarray) -> np.ndarray:
    """Evolve many schedules at once; returns amplitudes of shape (B, |F|).

    ``gammas`` and ``betas`` have shape (B, p).
    """
    gammas = np.atleast_2d(np.asarray(gammas, dtype=float))
    betas = np.atleast_2d(np.asarray(betas, dtype=float))
    if gammas.shape != betas.shape:
        raise ValueError("gamma and beta batches differ in shape")
    m = len(costs.set)
    amp = np.full((gammas.shape[0], m), 1.0 / np.sqrt(m), dtype=complex)
    for k in range(gammas.shape[1]):
        amp *= np.exp(-1j * gammas[:, k, None] * costs.value[None, :])
        mean = amp.mean(axis=1, keepdims=True)
        amp -= (1.0 - np.exp(-1j * betas[:, k, None])) * mean
    return amp


def expectation_batch(costs: CostTable, gammas: np.ndarray, betas: np.ndarray) -> np.ndarray:
    amp = run_schedule_batch(costs, gammas, betas)
    return (np.abs(amp) ** 2) @ costs.value
