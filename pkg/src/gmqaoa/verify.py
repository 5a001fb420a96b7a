"""Brute-force oracles and executable checks of the GM-QAOA properties.

The full-circuit pipeline runs the gate-level preparation circuit, applies
each phase separator as the diagonal of the Z-term Hamiltonian and each
mixer as ``grover_mixer_circuit``.  It is compared against the subspace
engine embedded into the full space.
"""
from __future__ import annotations

import json
import logging
import time
from collections.abc import Callable, Sequence
from dataclasses import asdict, dataclass, field

import numpy as np

from . import fullsim, mixers, problems, stateprep
from .fullsim import Circuit, FullState, PauliX, PhaseShift, RotZ, ControlledNot
from .problems import ZTerm
from .stateprep import PrepSpec
from .substate import (AngleSchedule, CostTable, FeasibleSet, SubspaceState, apply_grover_mixer,
                       run_schedule)

THEOREM1_TOL = 1e-10
ENGINE_TOL = 1e-8
PREP_LEAK_TOL = 1e-18
PIPELINE_LEAK_TOL = 1e-10
CLASS_TOL = 1e-9
FULL_MAX_QUBITS = 16

logger = logging.getLogger(__name__)
_BATCH_AMPS = 1 << 17  # cache-sized chunks are markedly faster than one big batch


# -- classical oracles --------------------------------------------------------

def brute_force_optimum(fset: FeasibleSet, costs: CostTable, sense: str = "max") -> tuple[float, list[int]]:
    if sense not in ("min", "max"):
        raise ValueError(f"sense must be 'min' or 'max', got {sense!r}")
    best = None
    winners: list[int] = []
    for x, v in zip(fset.members, costs.value):
        v = float(v)
        if best is None or (v > best if sense == "max" else v < best):
            best, winners = v, [int(x)]
        elif v == best:
            winners.append(int(x))
    return best, winners


@dataclass
class CostClassPartition:
    set: FeasibleSet
    classes: dict[float, list[int]]

    @classmethod
    def from_costs(cls, costs: CostTable, tol: float = CLASS_TOL) -> "CostClassPartition":
        """Group member indices whose costs differ by at most ``tol`` from the class head."""
        order = np.argsort(costs.value, kind="stable")
        classes: dict[float, list[int]] = {}
        head = None
        for i in order:
            v = float(costs.value[i])
            if head is None or v - head > tol:
                head = v
                classes[head] = []
            classes[head].append(int(i))
        return cls(costs.set, classes)

    def spread(self, amp: np.ndarray) -> float:
        worst = 0.0
        for idx in self.classes.values():
            a = amp[idx]
            # max pairwise |a_i - a_j| equals the diameter of the point cloud
            if a.size > 1:
                d = np.abs(a[:, None] - a[None, :]).max()
                worst = max(worst, float(d))
        return worst


@dataclass
class Theorem1Report:
    spread: float
    num_classes: int
    leaked: float | None = None
    tol: float = THEOREM1_TOL

    @property
    def passed(self) -> bool:
        ok = self.spread < self.tol
        if self.leaked is not None:
            ok = ok and self.leaked < PIPELINE_LEAK_TOL
        return ok


def check_theorem1(fset: FeasibleSet, costs: CostTable, schedule: AngleSchedule,
                   full_state: FullState | None = None) -> Theorem1Report:
    """Equal-cost members must carry equal amplitudes after any schedule.

    If a full-space state of the same evolution is supplied, its probability
    outside ``F`` is reported as well.
    """
    part = CostClassPartition.from_costs(costs)
    state = run_schedule(fset, costs, schedule)
    leaked = support_check(full_state, fset) if full_state is not None else None
    return Theorem1Report(part.spread(state.amp), len(part.classes), leaked)


def dense_evolution(members: np.ndarray, cost_values: np.ndarray, schedule: AngleSchedule) -> np.ndarray:
    """Independent oracle: explicit ``|F| x |F|`` round matrices multiplied in turn."""
    m = len(members)
    psi = np.ones(m, dtype=complex) / np.sqrt(m)
    ones = np.ones((m, m))
    for g, b in zip(schedule.gamma, schedule.beta):
        phase = np.diag(np.exp(-1j * g * np.asarray(cost_values, dtype=float)))
        mix = np.eye(m) - (1 - np.exp(-1j * b)) * ones / m
        psi = mix @ (phase @ psi)
    return psi


# -- full-circuit pipeline ------------------------------------------------------

def support_check(state: FullState, fset: FeasibleSet) -> float:
    """Probability mass on basis states outside ``fset``."""
    return leaked_probability(state.amp, fset)


def leaked_probability(amp: np.ndarray, fset: FeasibleSet) -> float:
    """Largest out-of-set probability over the rows of ``amp`` (one or two dimensional)."""
    probs = np.abs(amp) ** 2
    mask = np.ones(probs.shape[-1], dtype=bool)
    mask[fset.members] = False
    return float(probs[..., mask].sum(axis=-1).max()) if probs.ndim > 1 else float(probs[mask].sum())


def phase_separator_circuit(terms: Sequence[ZTerm], num_qubits: int, gamma: float) -> Circuit:
    """``exp(-i gamma sum_k w_k Z_{S_k})`` from CNOT parity ladders and RZ.

    A constant term becomes the global phase ``X P(t) X P(t) = e^{i pi t} I``.
    """
    circ = Circuit(num_qubits)
    for w, qs in terms:
        if not qs:
            t = -gamma * w / np.pi
            circ.extend([PauliX(0), PhaseShift(0, t), PauliX(0), PhaseShift(0, t)])
            continue
        qs = list(qs)
        ladder = [ControlledNot(qs[i], qs[i + 1]) for i in range(len(qs) - 1)]
        circ.extend(ladder)
        circ.append(RotZ(qs[-1], 2 * gamma * w))
        circ.extend(reversed(ladder))
    return circ


def _prepared_state(prep: PrepSpec) -> tuple[np.ndarray, float]:
    state, phase = stateprep.normalize_global_phase(prep.prepare())
    return state.amp, phase


def full_pipeline(prep: PrepSpec, diagonal: np.ndarray, schedule: AngleSchedule) -> FullState:
    """One schedule through the literal circuits (prep, diagonal phases, mixer circuits)."""
    amp, _ = _prepared_state(prep)
    state = FullState(prep.num_qubits, amp)
    for g, b in zip(schedule.gamma, schedule.beta):
        state.amp *= np.exp(-1j * g * diagonal)
        state = fullsim.run(fullsim.grover_mixer_circuit(prep.circuit, b), state)
    return state


def full_pipeline_batch(prep: PrepSpec, diagonal: np.ndarray,
                        schedules: Sequence[AngleSchedule]) -> np.ndarray:
    """Many equal-length schedules at once; returns amplitudes of shape (B, 2**N).

    The batch index occupies extra high qubits, so every angle-free gate of the
    mixer circuit acts on all schedules in one pass; only the selective phase
    gate takes a per-schedule angle.
    """
    n = prep.num_qubits
    if not schedules:
        return np.zeros((0, 1 << n), dtype=complex)
    p = schedules[0].p
    if any(s.p != p for s in schedules):
        raise ValueError("batched schedules must share p")
    base, _ = _prepared_state(prep)
    dim = 1 << n
    out = []
    chunk = max(1, _BATCH_AMPS // dim)
    template = fullsim.grover_mixer_circuit(prep.circuit, 0.0)
    selective = len(prep.circuit) + n  # gate index of the multi-controlled phase
    for start in range(0, len(schedules), chunk):
        group = schedules[start:start + chunk]
        bbits = max(1, (len(group) - 1).bit_length())
        amp = np.zeros((1 << bbits, dim), dtype=complex)
        amp[:len(group)] = base
        batch = FullState(n + bbits, amp.reshape(-1))
        view = batch.amp.reshape(1 << bbits, dim)
        for k in range(p):
            gam = np.zeros(1 << bbits)
            bet = np.zeros(1 << bbits)
            gam[:len(group)] = [s.gamma[k] for s in group]
            bet[:len(group)] = [s.beta[k] for s in group]
            view *= np.exp(-1j * gam[:, None] * diagonal[None, :])
            for i, gate in enumerate(template.gates):
                if i == selective:
                    # every qubit is 1 only on the last basis index
                    view[:, dim - 1] *= np.exp(-1j * bet)
                else:
                    fullsim.apply_inplace(batch, gate)
        out.append(view[:len(group)].copy())
    return np.concatenate(out)


def encoding_diagonal(enc: problems.Encoding, num_qubits: int) -> np.ndarray:
    return problems.terms_diagonal(enc.terms, num_qubits) - enc.offset


def cross_check_engines(prep: PrepSpec, enc: problems.Encoding, schedule: AngleSchedule,
                        costs: CostTable | None = None) -> float:
    """Max componentwise deviation between the full-circuit and subspace pipelines."""
    return cross_check_many(prep, enc, [schedule], costs)[0]


def cross_check_many(prep: PrepSpec, enc: problems.Encoding, schedules: Sequence[AngleSchedule],
                     costs: CostTable | None = None) -> list[float]:
    if prep.num_qubits > FULL_MAX_QUBITS:
        raise fullsim.CapExceededError(
            f"cross-check limited to {FULL_MAX_QUBITS} qubits, circuit has {prep.num_qubits}")
    fset = prep.target
    if costs is None:
        costs = CostTable.from_function(fset, enc.cost)
    diag = encoding_diagonal(enc, prep.num_qubits)
    out: list[float] = [0.0] * len(schedules)
    by_p: dict[int, list[int]] = {}
    for i, s in enumerate(schedules):
        by_p.setdefault(s.p, []).append(i)
    for idx in by_p.values():
        group = [schedules[i] for i in idx]
        full = full_pipeline_batch(prep, diag, group)
        for row, i in zip(full, idx):
            sub = run_schedule(fset, costs, schedules[i])
            emb = np.zeros(1 << prep.num_qubits, dtype=complex)
            emb[fset.members] = sub.amp
            out[i] = float(np.abs(row - emb).max())
    return out


# -- fixtures ---------------------------------------------------------------------

GNP_SEED = 7


def shipped_fixtures() -> dict[str, object]:
    return {
        "kvc_k3": problems.complete_graph(3, 1),
        "kvc_p4": problems.path_graph(4, 2),
        "kvc_gnp6": problems.random_graph(6, 0.5, 3, seed=GNP_SEED),
        "tsp3": problems.TspInstance(np.array([[0, 1, 3], [1, 0, 2], [3, 2, 0]], float), False),
        "tsp3_fixed": problems.TspInstance(np.array([[0, 1, 3], [1, 0, 2], [3, 2, 0]], float), True),
        "tsp4_fixed": problems.random_tsp(4, seed=11, symmetric=False, fixed_first_city=True),
        "tsp4": problems.random_tsp(4, seed=11, symmetric=False, fixed_first_city=False),
        "portfolio_4_2": problems.PortfolioInstance(4, 2, 1.0, (0.3, -0.1, 0.25, 0.05)),
    }


THEOREM1_FIXTURES = ("kvc_k3", "kvc_p4", "kvc_gnp6", "tsp3", "tsp4_fixed", "portfolio_4_2")


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    tol: float
    detail: dict = field(default_factory=dict)


def random_schedules(rng: np.random.Generator, p: int, count: int) -> list[AngleSchedule]:
    return [AngleSchedule.random(p, rng) for _ in range(count)]


def suite_theorem1(trials: int = 100, seed: int = 0, full_engine: bool = True,
                   p_values: Sequence[int] = (1, 2, 3)) -> list[Check]:
    rng = np.random.default_rng(seed)
    fixtures = shipped_fixtures()
    checks = []
    for name in THEOREM1_FIXTURES:
        inst = fixtures[name]
        fset = problems.feasible_set(inst)
        costs = problems.cost_table(inst, fset)
        part = CostClassPartition.from_costs(costs)
        prep = stateprep.prep_for(inst, fset) if full_engine else None
        diag = encoding_diagonal(problems.encoding(inst), prep.num_qubits) if prep else None
        spreads, leaks = [], []
        for p in p_values:
            scheds = random_schedules(rng, p, trials)
            for s in scheds:
                spreads.append(part.spread(run_schedule(fset, costs, s).amp))
            if prep is not None:
                leaks.append(leaked_probability(full_pipeline_batch(prep, diag, scheds), fset))
        spread = max(spreads)
        leak = max(leaks) if leaks else 0.0
        checks.append(Check(f"theorem1/{name}", spread < THEOREM1_TOL and leak < PIPELINE_LEAK_TOL,
                            spread, THEOREM1_TOL,
                            {"classes": len(part.classes), "schedules": len(spreads),
                             "mean_spread": float(np.mean(spreads)), "leaked": leak}))
    return checks


def suite_engines(trials: int = 25, seed: int = 1, p_values: Sequence[int] = (1, 2, 3)) -> list[Check]:
    rng = np.random.default_rng(seed)
    checks = []
    for name, inst in shipped_fixtures().items():
        fset = problems.feasible_set(inst)
        prep = stateprep.prep_for(inst, fset)
        if prep.num_qubits > FULL_MAX_QUBITS:
            continue
        enc = problems.encoding(inst)
        costs = problems.cost_table(inst, fset)
        devs = []
        for p in p_values:
            devs += cross_check_many(prep, enc, random_schedules(rng, p, trials), costs)
        worst = max(devs)
        checks.append(Check(f"engines/{name}", worst < ENGINE_TOL, worst, ENGINE_TOL,
                            {"qubits": prep.num_qubits, "schedules": len(devs)}))
    return checks


def suite_prep() -> list[Check]:
    checks = []
    cases: list[tuple[str, Circuit, FeasibleSet]] = []
    for n in (2, 3, 4):
        for fixed in (False, True):
            inst = problems.TspInstance(np.zeros((n, n)), fixed)
            cases.append((f"permutation{n}{'_fixed' if fixed else ''}",
                          stateprep.permutation_circuit(n, fixed), problems.tsp_feasible(inst)))
    for n in (3, 4):
        cases.append((f"alternating{n}", stateprep.alternating_circuit(n), stateprep.alternating_feasible(n)))
    cases.append(("portfolio_4_2", stateprep.portfolio_band_circuit(4, 2),
                  problems.portfolio_feasible(problems.PortfolioInstance(4, 2))))
    cases.append(("dicke_4_2", stateprep.dicke_prep_circuit(4, 2),
                  problems.kvc_feasible(problems.KvcInstance(4, (), 2))))
    for name, circ, fset in cases:
        state, _ = stateprep.normalize_global_phase(fullsim.run(circ))
        target = stateprep.uniform_superposition_vector(circ.num_qubits, fset.members)
        dev = float(np.abs(state.amp - target).max())
        leak = support_check(state, fset)
        checks.append(Check(f"prep/{name}", dev < 1e-9 and leak < PREP_LEAK_TOL, dev, 1e-9,
                            {"leaked": leak, "gates": len(circ), "members": len(fset)}))
    return checks


def suite_mixer(betas: Sequence[float] = (0.0, np.pi / 3, np.pi, 1.2345)) -> list[Check]:
    checks = []
    prep = stateprep.dicke_prep_circuit(4, 2)
    f = stateprep.dicke_state(4, 2).amp
    proj = np.outer(f, f.conj())
    for beta in betas:
        u = fullsim.circuit_unitary(fullsim.grover_mixer_circuit(prep, beta))
        target = np.eye(16) - (1 - np.exp(-1j * beta)) * proj
        dev = float(np.abs(u - target).max())
        checks.append(Check(f"mixer/dicke_4_2/beta={beta:.6g}", dev < 1e-9, dev, 1e-9))
    return checks


def suite_mcz(ts: Sequence[float] = (0.0, 0.37, 1.0, -0.5), max_controls: int = 5) -> list[Check]:
    checks = []
    for c in range(1, max_controls + 1):
        for t in ts:
            u = fullsim.circuit_unitary(fullsim.decompose_mcz(t, c))
            dev = float(np.abs(u - np.diag(fullsim.mcz_target_diagonal(t, c))).max())
            checks.append(Check(f"mcz/c={c}/t={t:g}", dev < 1e-9, dev, 1e-9))
    return checks


def suite_mixer_catalogue(max_n: int = 6, seed: int = 2) -> list[Check]:
    rng = np.random.default_rng(seed)
    checks = []
    for n in range(2, max_n + 1):
        for k in range(1, n):
            fset = problems.kvc_feasible(problems.KvcInstance(n, (), k))
            ring = mixers.xy_ring_restricted(fset)
            clique = mixers.xy_clique_restricted(fset)
            chain = mixers.support_chain_holds(fset)
            dev_ring = float(np.abs(mixers.restrict(mixers.full_xy_hamiltonian(n, mixers.ring_edges(n)), fset)
                                    - ring.matrix).max())
            dev_clique = float(np.abs(mixers.restrict(mixers.full_xy_hamiltonian(n, mixers.clique_edges(n)), fset)
                                      - clique.matrix).max())
            amp = rng.normal(size=len(fset)) + 1j * rng.normal(size=len(fset))
            state = SubspaceState(fset, amp / np.linalg.norm(amp))
            beta = float(rng.uniform(0, 2 * np.pi))
            gm = mixers.apply_restricted_exponential(state, mixers.gm_restricted(fset), beta)
            dev_gm = float(np.abs(gm.amp - apply_grover_mixer(state, beta).amp).max())
            ok = chain and dev_ring == 0 and dev_clique == 0 and dev_gm < 1e-9
            checks.append(Check(f"mixers/n={n}/k={k}", ok, max(dev_ring, dev_clique, dev_gm), 1e-9,
                                {"chain": chain, "ring": dev_ring, "clique": dev_clique, "gm": dev_gm}))
    return checks


SUITES: dict[str, Callable[..., list[Check]]] = {
    "theorem1": suite_theorem1,
    "engines": suite_engines,
    "prep": suite_prep,
    "mixer": suite_mixer,
    "mixers": suite_mixer_catalogue,
    "mcz": suite_mcz,
}
DEFAULT_SUITES = ("prep", "mixer", "mixers", "mcz", "theorem1", "engines")


def run_suites(names: Sequence[str], trials: int | None = None, seed: int = 0) -> dict:
    report = {"suites": {}, "passed": True}
    for name in names:
        fn = SUITES[name]
        kwargs = {}
        if trials is not None and name in ("theorem1", "engines"):
            kwargs["trials"] = trials
        if name in ("theorem1", "engines"):
            kwargs["seed"] = seed
        start = time.perf_counter()
        checks = fn(**kwargs)
        elapsed = time.perf_counter() - start
        passed = all(c.passed for c in checks)
        report["suites"][name] = {"passed": passed, "checks": [asdict(c) for c in checks]}
        report["passed"] = report["passed"] and passed
        # timing goes to the log only so the report stays byte-stable
        logger.info("suite %s finished in %.2fs", name, elapsed)
    return report


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, default=float) + "\n"
