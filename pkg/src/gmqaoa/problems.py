"""Problem instances, feasible-set enumeration and cost functions.

Three families are supported: Max-k-VertexCover (maximize), TSP (minimize)
and Discrete Portfolio Rebalancing (minimize).  Every family also yields a
diagonal Hamiltonian as a list of Pauli-Z product terms ``(weight, qubits)``;
a term evaluates to ``weight * prod_q (1 - 2 x_q)`` on basis state ``x``.
"""
from __future__ import annotations

import itertools
import json
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from math import comb, factorial
from pathlib import Path

import numpy as np

from .substate import CostTable, FeasibleSet

KVC_MAX_N = 24
TSP_MAX_N_FREE = 8
TSP_MAX_N_FIXED = 9
PORTFOLIO_MAX_N = 12


class CapExceeded(ValueError):
    """Instance too large to enumerate."""


class InstanceError(ValueError):
    """Malformed instance data."""


ZTerm = tuple[float, tuple[int, ...]]


def popcount(x: int) -> int:
    return bin(int(x)).count("1")


def bit(x: int, q: int) -> int:
    return (int(x) >> q) & 1


def evaluate_terms(terms: Sequence[ZTerm], x: int) -> float:
    total = 0.0
    for w, qs in terms:
        sign = 1
        for q in qs:
            if bit(x, q):
                sign = -sign
        total += w * sign
    return total


def terms_diagonal(terms: Sequence[ZTerm], num_qubits: int) -> np.ndarray:
    """Diagonal of the term Hamiltonian over all ``2**num_qubits`` basis states."""
    idx = np.arange(1 << num_qubits, dtype=np.int64)
    diag = np.zeros(idx.size)
    for w, qs in terms:
        parity = np.zeros(idx.size, dtype=np.int64)
        for q in qs:
            parity ^= (idx >> q) & 1
        diag += w * (1 - 2 * parity)
    return diag


def product_of_indicators(weight: float, qubits: Sequence[int]) -> list[ZTerm]:
    """Expand ``weight * prod_q x_q`` using ``x_q = (1 - Z_q) / 2``."""
    qubits = tuple(qubits)
    scale = weight / 2 ** len(qubits)
    out = []
    for r in range(len(qubits) + 1):
        for sub in itertools.combinations(qubits, r):
            out.append((scale * (-1) ** r, sub))
    return out


@dataclass
class Encoding:
    """Qubit encoding of a problem: feasibility, cost and Z-term Hamiltonian.

    ``evaluate_terms(terms, x) == cost(x) + offset`` for every feasible ``x``.
    """

    problem: object
    num_qubits: int
    is_feasible: Callable[[int], bool]
    cost: Callable[[int], float]
    terms: list[ZTerm]
    offset: float = 0.0
    sense: str = "max"

    def hamiltonian_value(self, x: int) -> float:
        return evaluate_terms(self.terms, x)


# -- Max-k-VertexCover -----------------------------------------------------

@dataclass(frozen=True)
class KvcInstance:
    n: int
    edges: tuple[tuple[int, int], ...]
    k: int

    def __post_init__(self):
        edges = []
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise InstanceError(f"self-loop on vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise InstanceError(f"edge ({u}, {v}) references a vertex outside 0..{self.n - 1}")
            edges.append((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", tuple(sorted(set(edges))))
        if not 0 <= self.k <= self.n:
            raise InstanceError(f"k={self.k} outside 0..{self.n}")

    sense = "max"


def kvc_feasible(inst: KvcInstance) -> FeasibleSet:
    if inst.n > KVC_MAX_N:
        raise CapExceeded(f"Max-k-VertexCover enumeration is capped at n <= {KVC_MAX_N}")
    members = (sum(1 << q for q in c) for c in itertools.combinations(range(inst.n), inst.k))
    return FeasibleSet.from_bitstrings(inst.n, members)


def kvc_cost(inst: KvcInstance, x: int) -> float:
    """Number of edges with at least one selected endpoint."""
    return float(sum(1 for u, v in inst.edges if bit(x, u) or bit(x, v)))


def kvc_hamiltonian_terms(inst: KvcInstance) -> list[ZTerm]:
    # per edge: (3 I - Z_j Z_l - Z_j - Z_l) / 4
    terms: list[ZTerm] = []
    for j, l in inst.edges:
        terms += [(0.75, ()), (-0.25, (j, l)), (-0.25, (j,)), (-0.25, (l,))]
    return terms


def kvc_encoding(inst: KvcInstance) -> Encoding:
    return Encoding(inst, inst.n, lambda x: popcount(x) == inst.k,
                    lambda x: kvc_cost(inst, x), kvc_hamiltonian_terms(inst), 0.0, "max")


# -- TSP ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TspInstance:
    """Cities ``0..n-1``; qubit ``r*n + c`` set means city ``c`` is visited at position ``r``."""

    dist: np.ndarray
    fixed_first_city: bool = False

    def __post_init__(self):
        d = np.array(self.dist, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise InstanceError("distance matrix must be square")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise InstanceError("distances must be finite and non-negative")
        if np.any(np.diag(d) != 0):
            raise InstanceError("distance matrix must have a zero diagonal")
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    sense = "min"


def encode_permutation(order: Sequence[int]) -> int:
    """Bitstring for the tour visiting ``order[r]`` at position ``r``."""
    n = len(order)
    return sum(1 << (r * n + c) for r, c in enumerate(order))


def decode_permutation(x: int, n: int) -> list[int]:
    order = []
    for r in range(n):
        row = (int(x) >> (r * n)) & ((1 << n) - 1)
        if popcount(row) != 1:
            raise InstanceError(f"row {r} of {x:0{n * n}b} is not one-hot")
        order.append(row.bit_length() - 1)
    if sorted(order) != list(range(n)):
        raise InstanceError(f"{x:0{n * n}b} violates a column constraint")
    return order


def is_permutation_matrix(x: int, n: int) -> bool:
    x = int(x)
    for r in range(n):
        if popcount((x >> (r * n)) & ((1 << n) - 1)) != 1:
            return False
    for c in range(n):
        if sum(bit(x, r * n + c) for r in range(n)) != 1:
            return False
    return x < (1 << (n * n))


def tsp_feasible(inst: TspInstance) -> FeasibleSet:
    n = inst.n
    cap = TSP_MAX_N_FIXED if inst.fixed_first_city else TSP_MAX_N_FREE
    if n > cap:
        raise CapExceeded(
            f"TSP enumeration is capped at n <= {cap} (fixed_first_city={inst.fixed_first_city})")
    if inst.fixed_first_city:
        perms = ((0,) + rest for rest in itertools.permutations(range(1, n)))
    else:
        perms = itertools.permutations(range(n))
    return FeasibleSet.from_bitstrings(n * n, (encode_permutation(p) for p in perms))


def tour_length(dist: np.ndarray, order: Sequence[int]) -> float:
    n = len(order)
    return float(sum(dist[order[r], order[(r + 1) % n]] for r in range(n)))


def tsp_cost(inst: TspInstance, x: int) -> float:
    """Closed-tour length of the permutation encoded by ``x``."""
    return tour_length(inst.dist, decode_permutation(x, inst.n))


def tsp_hamiltonian_terms(inst: TspInstance) -> list[ZTerm]:
    """Projector form: ``sum_r sum_{u != v} d(u,v) x_{r n + u} x_{(r+1 mod n) n + v}``."""
    n = inst.n
    terms: list[ZTerm] = []
    for r in range(n):
        nxt = (r + 1) % n
        for u in range(n):
            for v in range(n):
                if u == v or inst.dist[u, v] == 0:
                    continue
                terms += product_of_indicators(inst.dist[u, v], (r * n + u, nxt * n + v))
    return _merge_terms(terms)


def tsp_literal_z_terms(inst: TspInstance) -> list[ZTerm]:
    """Bare ``d(u,v) Z Z`` products, kept for comparison with the projector form."""
    n = inst.n
    return [(float(inst.dist[u, v]), (r * n + u, ((r + 1) % n) * n + v))
            for r in range(n) for u in range(n) for v in range(n) if u != v]


def tsp_encoding(inst: TspInstance) -> Encoding:
    n = inst.n

    def feasible(x):
        if not is_permutation_matrix(x, n):
            return False
        return not inst.fixed_first_city or bit(x, 0) == 1

    return Encoding(inst, n * n, feasible, lambda x: tsp_cost(inst, x),
                    tsp_hamiltonian_terms(inst), 0.0, "min")


# -- Discrete portfolio rebalancing -----------------------------------------

def linear_return_model(mu: Sequence[float]) -> Callable[[int, int], float]:
    mu = np.asarray(mu, dtype=float)

    def model(long_bits: int, short_bits: int) -> float:
        return -sum(mu[i] * (bit(long_bits, i) - bit(short_bits, i)) for i in range(mu.size))

    model.mu = mu  # type: ignore[attr-defined]
    return model


@dataclass(frozen=True, eq=False)
class PortfolioInstance:
    """Qubits ``0..n-1`` hold the short register ``s``, qubits ``n..2n-1`` the long register ``l``."""

    n: int
    d: int
    penalty_weight: float = 1.0
    mu: tuple[float, ...] | None = None
    cost_model: Callable[[int, int], float] | None = field(default=None, repr=False)

    def __post_init__(self):
        if not 0 <= self.d <= self.n:
            raise InstanceError(f"net lot total d={self.d} outside 0..{self.n}")
        if self.penalty_weight < 0:
            raise InstanceError("penalty weight must be non-negative")
        if self.mu is not None and len(self.mu) != self.n:
            raise InstanceError(f"mu has {len(self.mu)} entries for {self.n} assets")
        if self.cost_model is None:
            mu = self.mu if self.mu is not None else (0.0,) * self.n
            object.__setattr__(self, "mu", tuple(float(m) for m in mu))
            object.__setattr__(self, "cost_model", linear_return_model(mu))

    sense = "min"

    def split(self, x: int) -> tuple[int, int]:
        """Return ``(long_bits, short_bits)``."""
        mask = (1 << self.n) - 1
        return (int(x) >> self.n) & mask, int(x) & mask


def portfolio_band_sizes(n: int, d: int) -> list[int]:
    return [comb(n, d + k) * comb(n, k) for k in range(n - d + 1)]


def portfolio_feasible(inst: PortfolioInstance) -> FeasibleSet:
    n, d = inst.n, inst.d
    if n > PORTFOLIO_MAX_N:
        raise CapExceeded(f"portfolio enumeration is capped at n <= {PORTFOLIO_MAX_N}")
    members = []
    for k in range(n - d + 1):
        for s in itertools.combinations(range(n), k):
            sb = sum(1 << i for i in s)
            for l in itertools.combinations(range(n), d + k):
                lb = sum(1 << i for i in l)
                members.append((lb << n) | sb)
    return FeasibleSet.from_bitstrings(2 * n, members)


def portfolio_cost(inst: PortfolioInstance, x: int) -> float:
    long_bits, short_bits = inst.split(x)
    overlap = popcount(long_bits & short_bits)
    return inst.penalty_weight * overlap + float(inst.cost_model(long_bits, short_bits))


def portfolio_hamiltonian_terms(inst: PortfolioInstance) -> list[ZTerm]:
    """Terms for the penalty plus the default linear model (``mu`` required)."""
    if getattr(inst.cost_model, "mu", None) is None:
        raise InstanceError("Hamiltonian terms are only available for the linear return model")
    n = inst.n
    mu = inst.cost_model.mu  # type: ignore[attr-defined]
    terms: list[ZTerm] = []
    for i in range(n):
        terms += product_of_indicators(inst.penalty_weight, (i, n + i))
        terms += product_of_indicators(-mu[i], (n + i,))
        terms += product_of_indicators(mu[i], (i,))
    return _merge_terms(terms)


def portfolio_encoding(inst: PortfolioInstance) -> Encoding:
    def feasible(x):
        long_bits, short_bits = inst.split(x)
        return x < (1 << 2 * inst.n) and popcount(long_bits) - popcount(short_bits) == inst.d

    terms = portfolio_hamiltonian_terms(inst) if getattr(inst.cost_model, "mu", None) is not None else []
    return Encoding(inst, 2 * inst.n, feasible, lambda x: portfolio_cost(inst, x), terms, 0.0, "min")


def _merge_terms(terms: list[ZTerm]) -> list[ZTerm]:
    acc: dict[tuple[int, ...], float] = {}
    for w, qs in terms:
        key = tuple(sorted(qs))
        acc[key] = acc.get(key, 0.0) + w
    return [(w, qs) for qs, w in sorted(acc.items(), key=lambda kv: (len(kv[0]), kv[0])) if w != 0.0]


# -- generic access ---------------------------------------------------------

def feasible_set(inst) -> FeasibleSet:
    if isinstance(inst, KvcInstance):
        return kvc_feasible(inst)
    if isinstance(inst, TspInstance):
        return tsp_feasible(inst)
    if isinstance(inst, PortfolioInstance):
        return portfolio_feasible(inst)
    raise TypeError(f"unsupported instance type {type(inst).__name__}")


def encoding(inst) -> Encoding:
    if isinstance(inst, KvcInstance):
        return kvc_encoding(inst)
    if isinstance(inst, TspInstance):
        return tsp_encoding(inst)
    if isinstance(inst, PortfolioInstance):
        return portfolio_encoding(inst)
    raise TypeError(f"unsupported instance type {type(inst).__name__}")


def cost_table(inst, fset: FeasibleSet | None = None) -> CostTable:
    fset = fset if fset is not None else feasible_set(inst)
    enc = encoding(inst)
    return CostTable.from_function(fset, enc.cost)


def sense_of(inst) -> str:
    return inst.sense


def n_feasible(inst) -> int:
    """Closed-form feasible-set size, available without enumerating."""
    if isinstance(inst, KvcInstance):
        return comb(inst.n, inst.k)
    if isinstance(inst, TspInstance):
        return factorial(inst.n - 1) if inst.fixed_first_city else factorial(inst.n)
    if isinstance(inst, PortfolioInstance):
        return sum(portfolio_band_sizes(inst.n, inst.d))
    raise TypeError(f"unsupported instance type {type(inst).__name__}")


def check_caps(inst) -> None:
    if isinstance(inst, KvcInstance) and inst.n > KVC_MAX_N:
        raise CapExceeded(f"Max-k-VertexCover is capped at n <= {KVC_MAX_N}")
    if isinstance(inst, TspInstance):
        cap = TSP_MAX_N_FIXED if inst.fixed_first_city else TSP_MAX_N_FREE
        if inst.n > cap:
            raise CapExceeded(f"TSP is capped at n <= {cap} (fixed_first_city={inst.fixed_first_city})")
    if isinstance(inst, PortfolioInstance) and inst.n > PORTFOLIO_MAX_N:
        raise CapExceeded(f"portfolio is capped at n <= {PORTFOLIO_MAX_N}")


# -- fixtures and file formats ----------------------------------------------

def complete_graph(n: int, k: int) -> KvcInstance:
    return KvcInstance(n, tuple(itertools.combinations(range(n), 2)), k)


def path_graph(n: int, k: int) -> KvcInstance:
    return KvcInstance(n, tuple((i, i + 1) for i in range(n - 1)), k)


def random_graph(n: int, p: float, k: int, seed: int) -> KvcInstance:
    import networkx as nx

    g = nx.gnp_random_graph(n, p, seed=seed)
    return KvcInstance(n, tuple(g.edges()), k)


def random_tsp(n: int, seed: int, symmetric: bool = True, fixed_first_city: bool = False) -> TspInstance:
    rng = np.random.default_rng(seed)
    d = rng.integers(1, 10, size=(n, n)).astype(float)
    if symmetric:
        d = np.triu(d, 1)
        d = d + d.T
    np.fill_diagonal(d, 0.0)
    return TspInstance(d, fixed_first_city)


def instance_from_dict(data: dict):
    if not isinstance(data, dict):
        raise InstanceError("instance must be a JSON object")
    kind = data.get("problem")
    try:
        if kind == "kvc":
            n = int(data["n"]) if "n" in data else 1 + max(max(e) for e in data["edges"])
            return KvcInstance(n, tuple(tuple(e) for e in data["edges"]), int(data["k"]))
        if kind == "tsp":
            return TspInstance(np.array(data["dist"], dtype=float),
                               bool(data.get("fixed_first_city", False)))
        if kind == "portfolio":
            mu = data.get("mu")
            return PortfolioInstance(int(data["n"]), int(data["d"]),
                                     float(data.get("penalty", 1.0)),
                                     tuple(mu) if mu is not None else None)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InstanceError):
            raise
        raise InstanceError(f"bad {kind} instance: {exc!r}") from exc
    raise InstanceError(f"unknown problem type {kind!r}; expected kvc, tsp or portfolio")


def instance_to_dict(inst) -> dict:
    if isinstance(inst, KvcInstance):
        return {"problem": "kvc", "n": inst.n, "edges": [list(e) for e in inst.edges], "k": inst.k}
    if isinstance(inst, TspInstance):
        return {"problem": "tsp", "dist": inst.dist.tolist(), "fixed_first_city": inst.fixed_first_city}
    if isinstance(inst, PortfolioInstance):
        return {"problem": "portfolio", "n": inst.n, "d": inst.d,
                "penalty": inst.penalty_weight, "mu": list(inst.mu or ())}
    raise TypeError(f"unsupported instance type {type(inst).__name__}")


def parse_edge_list(text: str, k: int, n: int | None = None) -> KvcInstance:
    """Plain ``u v`` per line; blank lines and ``#`` comments ignored."""
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InstanceError(f"line {lineno}: expected 'u v', got {raw!r}")
        try:
            edges.append((int(parts[0]), int(parts[1])))
        except ValueError as exc:
            raise InstanceError(f"line {lineno}: {exc}") from exc
    if n is None:
        n = 1 + max((max(e) for e in edges), default=-1)
    return KvcInstance(n, tuple(edges), k)


def load_instance(path: str | Path, k: int | None = None):
    """Load a JSON instance, or a plain edge list when ``k`` is supplied.

    Raises :class:`json.JSONDecodeError` (with line/column) on malformed JSON.
    """
    path = Path(path)
    text = path.read_text()
    if path.suffix in (".txt", ".edges", ".el"):
        if k is None:
            raise InstanceError("edge-list input needs a cover size (--k)")
        return parse_edge_list(text, k)
    return instance_from_dict(json.loads(text))
