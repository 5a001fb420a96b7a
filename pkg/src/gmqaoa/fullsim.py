"""Full ``2**n`` statevector simulator for the explicit GM-QAOA circuits.

Qubit ``q`` is bit ``q`` of the basis index.  The state is viewed as an
``n``-dimensional ``(2, 2, ..., 2)`` tensor whose axis ``n - 1 - q`` belongs to
qubit ``q``; every gate fixes its control axes to 1 (a numpy view) and then
acts on the register formed by its target axes.  Permutation-type gates
(Multi-Toffoli, Increment, cyclic shift, controlled swap) are executed
exactly as index permutations, never compiled further.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb

import numpy as np

DEFAULT_MAX_AMPS = 1 << 22
UNITARY_MAX_QUBITS = 12


class CircuitError(ValueError):
    pass


class CapExceededError(RuntimeError):
    pass


def max_amplitudes() -> int:
    """Statevector cap; the ``GMQAOA_MAX_AMPS`` environment variable overrides it."""
    env = os.environ.get("GMQAOA_MAX_AMPS")
    return int(env) if env else DEFAULT_MAX_AMPS


# kind -> (number of targets or None for a register, takes a parameter)
GATE_KINDS = {
    "X": (1, False),
    "H": (1, False),
    "RY": (1, True),
    "RZ": (1, True),
    "P": (1, True),          # diag(1, e^{i pi t})
    "CNOT": (1, False),
    "CSWAP": (2, False),
    "CRY": (1, True),
    "MCP": (1, True),        # multi-controlled P(t)
    "MCX": (1, False),       # Multi-Toffoli
    "INC": (None, False),
    "DEC": (None, False),
    "CSHIFT": (None, True),  # param: +1 moves register[i] -> register[i+1]
    "DICKE": (None, False),  # weight-class map |1^k 0^(m-k)> -> |D^m_k>
}
_CONTROLLED = {"CNOT", "CSWAP", "CRY", "MCP", "MCX", "CSHIFT"}
_SELF_INVERSE = {"X", "H", "CNOT", "CSWAP", "MCX", "DICKE"}


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple[int, ...]
    controls: tuple[int, ...] = ()
    param: float = 0.0

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise CircuitError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(int(q) for q in self.targets))
        object.__setattr__(self, "controls", tuple(int(q) for q in self.controls))
        ntargets, _ = GATE_KINDS[self.kind]
        if ntargets is not None and len(self.targets) != ntargets:
            raise CircuitError(f"{self.kind} takes {ntargets} target(s), got {len(self.targets)}")
        if not self.targets:
            raise CircuitError(f"{self.kind} needs at least one target")
        if self.controls and self.kind not in _CONTROLLED:
            raise CircuitError(f"{self.kind} does not accept controls")
        if self.kind == "CNOT" and len(self.controls) != 1:
            raise CircuitError("CNOT takes exactly one control")
        qubits = self.qubits
        if len(set(qubits)) != len(qubits):
            raise CircuitError(f"repeated qubit in {self}")
        if min(qubits) < 0:
            raise CircuitError(f"negative qubit index in {self}")

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.controls + self.targets

    def inverse(self) -> "Gate":
        if self.kind in _SELF_INVERSE:
            return self
        if self.kind == "INC":
            return Gate("DEC", self.targets)
        if self.kind == "DEC":
            return Gate("INC", self.targets)
        return Gate(self.kind, self.targets, self.controls, -self.param)


# constructors named after the operations they stand for
def PauliX(q): return Gate("X", (q,))
def Hadamard(q): return Gate("H", (q,))
def RotY(q, angle): return Gate("RY", (q,), (), angle)
def RotZ(q, angle): return Gate("RZ", (q,), (), angle)
def PhaseShift(q, t): return Gate("P", (q,), (), t)
def ControlledNot(c, t): return Gate("CNOT", (t,), (c,))
def ControlledSwap(controls, a, b): return Gate("CSWAP", (a, b), tuple(controls))
def ControlledRotY(controls, t, angle): return Gate("CRY", (t,), tuple(controls), angle)
def MultiControlledPhase(controls, t, exponent): return Gate("MCP", (t,), tuple(controls), exponent)
def MultiToffoli(controls, t): return Gate("MCX", (t,), tuple(controls))
def Increment(register): return Gate("INC", tuple(register))
def Decrement(register): return Gate("DEC", tuple(register))
def CyclicShift(register, controls=(), shift=1): return Gate("CSHIFT", tuple(register), tuple(controls), shift)
def DickeMap(register): return Gate("DICKE", tuple(register))


@dataclass
class Circuit:
    num_qubits: int
    gates: list[Gate] = field(default_factory=list)

    def __post_init__(self):
        for g in self.gates:
            self._check(g)

    def _check(self, g: Gate) -> None:
        if max(g.qubits) >= self.num_qubits:
            raise CircuitError(f"{g} addresses a qubit outside 0..{self.num_qubits - 1}")

    def append(self, gate: Gate) -> "Circuit":
        self._check(gate)
        self.gates.append(gate)
        return self

    def extend(self, gates) -> "Circuit":
        for g in gates:
            self.append(g)
        return self

    def __len__(self) -> int:
        return len(self.gates)

    def __add__(self, other: "Circuit") -> "Circuit":
        n = max(self.num_qubits, other.num_qubits)
        return Circuit(n, self.gates + other.gates)

    def inverse(self) -> "Circuit":
        return Circuit(self.num_qubits, [g.inverse() for g in reversed(self.gates)])

    def count(self, kind: str | None = None) -> int:
        return len(self.gates) if kind is None else sum(g.kind == kind for g in self.gates)

    # -- text format -------------------------------------------------------
    def to_text(self) -> str:
        lines = [f"QUBITS {self.num_qubits}"]
        for g in self.gates:
            parts = [g.kind]
            if g.kind in _CONTROLLED:
                parts += [str(c) for c in g.controls] + [":"]
            parts += [str(t) for t in g.targets]
            if GATE_KINDS[g.kind][1]:
                parts.append(repr(float(g.param)))
            lines.append(" ".join(parts))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Circuit":
        num_qubits = None
        gates = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            try:
                if tok[0] == "QUBITS":
                    num_qubits = int(tok[1])
                    continue
                kind = tok[0]
                if kind not in GATE_KINDS:
                    raise CircuitError(f"unknown gate kind {kind!r}")
                args = tok[1:]
                param = 0.0
                if GATE_KINDS[kind][1]:
                    param = float(args.pop())
                controls: list[int] = []
                if kind in _CONTROLLED:
                    sep = args.index(":")
                    controls = [int(a) for a in args[:sep]]
                    args = args[sep + 1:]
                gates.append(Gate(kind, tuple(int(a) for a in args), tuple(controls), param))
            except (ValueError, IndexError) as exc:
                raise CircuitError(f"line {lineno}: cannot parse {raw!r}: {exc}") from exc
        if num_qubits is None:
            raise CircuitError("missing QUBITS header")
        return cls(num_qubits, gates)


@dataclass(eq=False)
class FullState:
    num_qubits: int
    amp: np.ndarray

    @classmethod
    def zero(cls, num_qubits: int) -> "FullState":
        return cls.basis(num_qubits, 0)

    @classmethod
    def basis(cls, num_qubits: int, index: int) -> "FullState":
        size = 1 << num_qubits
        if size > max_amplitudes():
            raise CapExceededError(
                f"{num_qubits} qubits need {size} amplitudes; cap is {max_amplitudes()}")
        amp = np.zeros(size, dtype=complex)
        amp[index] = 1.0
        return cls(num_qubits, amp)

    def copy(self) -> "FullState":
        return FullState(self.num_qubits, self.amp.copy())

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amp))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amp) ** 2

    def support(self, atol: float = 1e-12) -> np.ndarray:
        return np.flatnonzero(np.abs(self.amp) > atol)


# -- kernels ---------------------------------------------------------------

def _matrix_1q(g: Gate) -> np.ndarray:
    k, a = g.kind, g.param
    if k in ("X", "CNOT", "MCX"):
        return np.array([[0, 1], [1, 0]], dtype=complex)
    if k == "H":
        return np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    if k in ("RY", "CRY"):
        c, s = np.cos(a / 2), np.sin(a / 2)
        return np.array([[c, -s], [s, c]], dtype=complex)
    if k == "RZ":
        return np.diag([np.exp(-0.5j * a), np.exp(0.5j * a)])
    if k in ("P", "MCP"):
        return np.diag([1.0, np.exp(1j * np.pi * a)])
    raise CircuitError(f"{k} is not a single-qubit matrix gate")


@lru_cache(maxsize=64)
def dicke_map_matrix(m: int) -> np.ndarray:
    """Real orthogonal, symmetric, involutory map on ``m`` qubits.

    Inside each Hamming-weight class ``k`` it is the Householder reflection
    exchanging the unary state ``|1^k 0^(m-k)>`` (qubits ``0..k-1`` set) with the
    Dicke state ``|D^m_k>``; it therefore preserves Hamming weight.
    """
    if m > UNITARY_MAX_QUBITS:
        raise CapExceededError(f"Dicke map on {m} qubits exceeds cap {UNITARY_MAX_QUBITS}")
    dim = 1 << m
    weights = np.array([bin(i).count("1") for i in range(dim)])
    out = np.eye(dim)
    for k in range(m + 1):
        cls_idx = np.flatnonzero(weights == k)
        if cls_idx.size == 1:
            continue
        v = np.zeros(dim)
        v[cls_idx] = -1.0 / np.sqrt(comb(m, k))
        v[(1 << k) - 1] += 1.0
        out[np.ix_(cls_idx, cls_idx)] -= 2.0 * np.outer(v[cls_idx], v[cls_idx]) / (v @ v)
    out.setflags(write=False)
    return out


def _register_view(psi: np.ndarray, n: int, g: Gate) -> tuple[np.ndarray, int]:
    """View with controls fixed to 1 and target axes moved last (MSB first)."""
    idx: list = [slice(None)] * n
    for c in g.controls:
        idx[n - 1 - c] = 1
    sub = psi[tuple(idx)]
    # axes that survive the control indexing, in order
    kept = [ax for ax in range(n) if idx[ax] == slice(None)]
    reg_axes = [kept.index(n - 1 - q) for q in reversed(g.targets)]
    m = len(g.targets)
    return np.moveaxis(sub, reg_axes, list(range(sub.ndim - m, sub.ndim))), m


def _register_permutation(g: Gate) -> np.ndarray:
    """perm[v] = image of register value v (register[0] least significant)."""
    m = len(g.targets)
    dim = 1 << m
    v = np.arange(dim)
    if g.kind == "INC":
        return (v + 1) % dim
    if g.kind == "DEC":
        return (v - 1) % dim
    if g.kind == "CSWAP":
        b0, b1 = v & 1, (v >> 1) & 1
        return (v & ~3) | (b0 << 1) | b1
    if g.kind == "CSHIFT":
        s = int(round(g.param)) % m
        bits = (v[:, None] >> np.arange(m)) & 1
        # content of register[i] moves to register[i + s]
        return (np.roll(bits, s, axis=1) << np.arange(m)).sum(axis=1)
    raise CircuitError(f"{g.kind} is not a permutation gate")


def apply_inplace(state: FullState, g: Gate) -> FullState:
    n = state.num_qubits
    if max(g.qubits) >= n:
        raise CircuitError(f"{g} addresses a qubit outside 0..{n - 1}")
    psi = state.amp.reshape((2,) * n)
    view, m = _register_view(psi, n, g)
    if g.kind in ("X", "CNOT", "MCX"):
        view[...] = view[..., ::-1].copy()
    elif g.kind in ("P", "MCP"):
        view[..., 1] *= np.exp(1j * np.pi * g.param)
    elif g.kind in ("H", "RY", "RZ", "CRY"):
        mat = _matrix_1q(g)
        view[...] = view @ mat.T
    elif g.kind == "DICKE":
        mat = dicke_map_matrix(m)
        flat = view.reshape(view.shape[:-m] + (1 << m,))
        out = flat @ mat.T
        view[...] = out.reshape(view.shape)
    else:
        perm = _register_permutation(g)
        flat = view.reshape(view.shape[:-m] + (1 << m,))
        out = np.empty_like(flat)
        out[..., perm] = flat
        view[...] = out.reshape(view.shape)
    return state


def apply(state: FullState, g: Gate) -> FullState:
    """Return a new state; the input is left untouched."""
    return apply_inplace(state.copy(), g)


def run(circuit: Circuit, initial: FullState | None = None) -> FullState:
    if initial is None:
        initial = FullState.zero(circuit.num_qubits)
    if initial.num_qubits != circuit.num_qubits:
        raise CircuitError(
            f"state has {initial.num_qubits} qubits, circuit has {circuit.num_qubits}")
    state = initial.copy()
    for g in circuit.gates:
        apply_inplace(state, g)
    return state


def circuit_unitary(circuit: Circuit, max_qubits: int = UNITARY_MAX_QUBITS) -> np.ndarray:
    """Dense unitary; column ``j`` is the circuit applied to basis state ``j``."""
    n = circuit.num_qubits
    if n > max_qubits:
        raise CapExceededError(f"circuit_unitary limited to {max_qubits} qubits, got {n}")
    dim = 1 << n
    # run all basis columns at once: a batch axis in front of the qubit axes
    batch = FullState(n + _batch_bits(dim), np.eye(dim, dtype=complex).reshape(-1))
    for g in circuit.gates:
        apply_inplace(batch, g)
    return batch.amp.reshape(dim, dim).T


def _batch_bits(dim: int) -> int:
    return dim.bit_length() - 1


# -- mixer and multi-controlled phase --------------------------------------

def grover_mixer_circuit(prep: Circuit, beta: float) -> Circuit:
    """``U_S (Id - (1 - e^{-i beta}) |0><0|) U_S^dagger`` built from gates.

    The selective phase on ``|0...0>`` is an X layer, a phase ``Z^{-beta/pi}``
    on the last qubit controlled by all others, and a second X layer.
    """
    n = prep.num_qubits
    every = list(range(n))
    out = prep.inverse()
    out.extend(PauliX(q) for q in every)
    if n == 1:
        out.append(PhaseShift(0, -beta / np.pi))
    else:
        out.append(MultiControlledPhase(every[:-1], every[-1], -beta / np.pi))
    out.extend(PauliX(q) for q in every)
    out.extend(prep.gates)
    return out


def decompose_mcz(t: float, num_controls: int) -> Circuit:
    """Multi-controlled ``Z^t`` from Multi-Toffolis, Increment/Decrement and phases.

    Qubits ``0..c-1`` are controls, qubit ``c`` is the target.  Controls are
    split alternately into two groups A, B; the target sees
    ``X^A Z^{-t/4} X^B Z^{t/4}`` twice, which yields ``Z^t`` times a stray phase
    ``e^{-i pi t/2}`` when every control is set.  An increment on the control
    register sandwiched between phase layers restores exactly that phase.
    """
    c = int(num_controls)
    if c < 1:
        raise ValueError("num_controls must be >= 1")
    target = c
    controls = list(range(c))
    group_a, group_b = controls[0::2], controls[1::2]

    def toggle(group):
        return MultiToffoli(group, target) if group else PauliX(target)

    circ = Circuit(c + 1)
    for _ in range(2):
        circ.extend([toggle(group_a), PhaseShift(target, -t / 4),
                     toggle(group_b), PhaseShift(target, t / 4)])
    denom = 2.0 ** (c + 1)
    circ.append(Increment(controls))
    circ.extend(PhaseShift(q, -t * 2.0 ** q / denom) for q in controls[1:])
    circ.append(Decrement(controls))
    circ.append(PhaseShift(0, 2 * t / denom))
    circ.extend(PhaseShift(q, t * 2.0 ** q / denom) for q in controls[1:])
    return circ


def mcz_target_diagonal(t: float, num_controls: int) -> np.ndarray:
    diag = np.ones(1 << (num_controls + 1), dtype=complex)
    diag[-1] = np.exp(1j * np.pi * t)
    return diag
