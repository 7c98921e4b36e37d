"""Multi-digit compilation of Ising problems onto low-precision hardware.

Each pair coupling is quantized to ``[-M_q, M_q]`` with ``M_q`` much larger
than the device bound ``c_max``, then written as base-``q`` digits whose
place values are realized by replicating spins. Replicas are tied to their
original by ferromagnetic penalty couplings, so every emitted directed entry
stays within ``[-c_max, c_max]`` while the coherent part of the energy
landscape carries the full ``M_q`` resolution.

Three-digit layout (``n`` originals, ``q`` copies each)::

    -a_ij (sum_k s_ik)(sum_l s_jl) - b_ij (sum_k s_ik) s_j - c_ij s_i s_j

Two-digit layout: ``K' = alpha * beta * gamma + residual`` where ``alpha``
couples the first ``beta`` replicas of ``i`` with the first ``gamma``
replicas of ``j`` (the original counts as replica 1).
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Tuple, Union

import numpy as np

from .errors import BoundError, BudgetError, InvariantError, ParseError
from .hardware import DeviceProgram, HardwareProfile, quantize_pairs, validate
from .ising import IsingProblem, as_spins

__all__ = [
    "MultiDigitConfig",
    "MappingPlan",
    "Factorization",
    "effective_range",
    "lifted_quantize",
    "digit_decompose_3",
    "digit_decompose_2",
    "factorize_min_copies",
    "map_three_digit",
    "map_two_digit",
    "map_problem",
    "native_plan",
    "decode",
    "coherent_extend",
    "coherence_violations",
    "read_plan",
    "write_plan",
]


def effective_range(digits: int, q: int) -> int:
    """Largest magnitude ``M_q`` representable with ``digits`` base-``q`` digits."""
    if digits == 3:
        return (q - 1) * (q * q + q + 1)
    if digits == 2:
        return (q - 1) * (q + 1)
    raise ValueError(f"digits must be 2 or 3, got {digits}")


def check_base(q: int, c_max: int) -> None:
    """Reject ``q > c_max + 1``; warn on the borderline ``q == c_max + 1``."""
    if q < 2:
        raise ValueError(f"base q must be >= 2, got {q}")
    if q > c_max + 1:
        raise BoundError(f"base q={q} exceeds c_max + 1 = {c_max + 1}")
    if q == c_max + 1:
        warnings.warn(
            f"base q={q} equals c_max + 1; digit couplings reach q-1 = c_max",
            stacklevel=3,
        )


@dataclass(frozen=True)
class MultiDigitConfig:
    digits: int
    q: int
    penalty_weight: Optional[int] = None

    def __post_init__(self):
        if self.digits not in (2, 3):
            raise ValueError(f"digits must be 2 or 3, got {self.digits}")
        if self.q < 2:
            raise ValueError(f"base q must be >= 2, got {self.q}")
        if self.penalty_weight is not None and self.penalty_weight < 1:
            raise ValueError("penalty_weight must be a positive integer")

    @property
    def m_q(self) -> int:
        return effective_range(self.digits, self.q)

    def resolve(self, profile: HardwareProfile) -> int:
        """Check the config against a profile and return the penalty weight."""
        check_base(self.q, profile.c_max)
        w = profile.c_max if self.penalty_weight is None else self.penalty_weight
        if w > profile.c_max:
            raise BoundError(f"penalty_weight {w} exceeds c_max {profile.c_max}")
        return w


@dataclass
class MappingPlan:
    """Everything needed to turn a device solution back into original spins.

    ``groups[i]`` lists the device spins holding replicas of original spin
    ``i``; the first entry is the original itself. ``edge_terms`` maps
    ``"i,j"`` to the digit coefficients used for that ordered pair.
    ``digits == 1`` denotes the native one-spin-per-variable mapping.
    """

    n_original: int
    groups: List[List[int]]
    digits: int
    q: Optional[int]
    m_q: int
    penalty_weight: int
    quantized: np.ndarray
    edge_terms: Dict[str, dict] = field(default_factory=dict)
    ancilla: Optional[int] = None
    scale: float = 1.0

    @property
    def n_device(self) -> int:
        return sum(len(g) for g in self.groups)

    def to_dict(self) -> dict:
        return {
            "n_original": self.n_original,
            "n_device": self.n_device,
            "digits": self.digits,
            "q": self.q,
            "m_q": self.m_q,
            "penalty_weight": self.penalty_weight,
            "groups": [list(map(int, g)) for g in self.groups],
            "edge_terms": self.edge_terms,
            "quantized": np.asarray(self.quantized).astype(int).tolist(),
            "ancilla": self.ancilla,
            "scale": self.scale,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MappingPlan":
        try:
            return cls(
                n_original=int(d["n_original"]),
                groups=[[int(x) for x in g] for g in d["groups"]],
                digits=int(d["digits"]),
                q=None if d.get("q") is None else int(d["q"]),
                m_q=int(d["m_q"]),
                penalty_weight=int(d["penalty_weight"]),
                quantized=np.asarray(d["quantized"], dtype=np.int64),
                edge_terms=dict(d.get("edge_terms", {})),
                ancilla=d.get("ancilla"),
                scale=float(d.get("scale", 1.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed mapping plan: {exc}") from None


def write_plan(plan: MappingPlan, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(plan.to_dict(), indent=1, sort_keys=True) + "\n")


def read_plan(path: Union[str, Path]) -> MappingPlan:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"plan is not valid JSON: {exc}") from None
    return MappingPlan.from_dict(d)


def lifted_quantize(problem: IsingProblem, m_q: int) -> np.ndarray:
    """Quantize pair couplings to ``[-m_q, m_q]`` with the ceil/floor split."""
    return quantize_pairs(problem, m_q)


def digit_decompose_3(k: int, q: int) -> Tuple[int, int, int]:
    """Signed base-``q`` digits ``(a, b, c)`` with ``q*q*a + q*b + c == k``.

    All three digits share the sign of ``k``.

    >>> digit_decompose_3(403, 8)
    (6, 2, 3)
    """
    k = int(k)
    if abs(k) > effective_range(3, q):
        raise ValueError(f"|{k}| exceeds the 3-digit base-{q} range {effective_range(3, q)}")
    sign = -1 if k < 0 else 1
    e, rest = divmod(abs(k), q * q)
    f, g = divmod(rest, q)
    return sign * e, sign * f, sign * g


def digit_decompose_2(k: int, q: int) -> Tuple[int, int]:
    """Signed digits ``(f, g)`` with ``q*f + g == k``."""
    k = int(k)
    if abs(k) > effective_range(2, q):
        raise ValueError(f"|{k}| exceeds the 2-digit base-{q} range {effective_range(2, q)}")
    sign = -1 if k < 0 else 1
    f, g = divmod(abs(k), q)
    return sign * f, sign * g


class Factorization(NamedTuple):
    formulation: str  # "A": alpha*beta*gamma = q*f; "B": = (q+1)*f
    alpha: int
    beta: int
    gamma: int
    residual: int

    @property
    def copies(self) -> int:
        return max(self.beta, self.gamma)


def _best_triple(target: int, c_max: int) -> Tuple[int, int, int]:
    """Minimize ``max(beta, gamma)`` over ``alpha*beta*gamma == target``,
    ``1 <= alpha <= c_max``; then smaller ``beta + gamma``, smaller
    ``alpha``, smaller ``beta``."""
    best = None
    for alpha in range(1, min(c_max, target) + 1):
        if target % alpha:
            continue
        rest = target // alpha
        for beta in range(1, rest + 1):
            if rest % beta:
                continue
            gamma = rest // beta
            key = (max(beta, gamma), beta + gamma, alpha, beta)
            if best is None or key < best[0]:
                best = (key, (alpha, beta, gamma))
    return best[1]


def factorize_min_copies(f: int, q: int, c_max: int, g: int = 0) -> Factorization:
    """Choose the two-digit factorization needing the fewest replicas.

    Formulation A writes ``q*f + g`` as ``alpha*beta*gamma = q*f`` plus a
    residual ``g``; formulation B writes it as ``alpha*beta*gamma = (q+1)*f``
    plus a residual ``g - f``. Each is searched exhaustively and the one with
    the smaller ``max(beta, gamma)`` wins, A on ties. The sign of ``f`` is
    carried by ``alpha``.

    Args:
        f: Leading digit, ``0 < |f| <= q - 1``.
        q: Base.
        c_max: Bound on ``|alpha|``.
        g: Trailing digit (same sign as ``f``); only affects the residual.
    """
    f, g = int(f), int(g)
    if f == 0:
        raise ValueError("f == 0 needs no factorization")
    if abs(f) > q - 1:
        raise ValueError(f"|f| = {abs(f)} exceeds q - 1 = {q - 1}")
    sign = -1 if f < 0 else 1
    options = []
    for name, mult, residual in (("A", q, g), ("B", q + 1, g - f)):
        alpha, beta, gamma = _best_triple(mult * abs(f), c_max)
        options.append(Factorization(name, sign * alpha, beta, gamma, residual))
    a, b = options
    return b if b.copies < a.copies else a


def _budget_check(needed: int, profile: HardwareProfile, what: str) -> None:
    if needed > profile.max_spins:
        raise BudgetError(
            f"{what} needs {needed} device spins, profile {profile.name!r} allows {profile.max_spins}"
        )


def _add_penalties(K: np.ndarray, groups: List[List[int]], weight: int) -> None:
    for g in groups:
        for a in g:
            for b in g:
                if a != b:
                    K[a, b] += weight


def _finish(K: np.ndarray, profile: HardwareProfile) -> DeviceProgram:
    if np.abs(K).max(initial=0) > profile.c_max:
        raise InvariantError("emitted coupling exceeds c_max")
    program = DeviceProgram(K)
    bad = [v for v in validate(program, profile) if v.kind != "spin_budget"]
    if bad:
        raise InvariantError("; ".join(map(str, bad)))
    return program


def map_three_digit(
    problem: IsingProblem, profile: HardwareProfile, cfg: MultiDigitConfig
) -> Tuple[DeviceProgram, MappingPlan]:
    """Compile with three base-``q`` digits and ``q`` copies per spin.

    Device layout: originals ``0..n-1``, then the copies of spin ``i`` at
    ``n + i*q .. n + i*q + q - 1``.
    """
    if cfg.digits != 3:
        raise ValueError("map_three_digit needs digits == 3")
    weight = cfg.resolve(profile)
    n, q = problem.n, cfg.q
    _budget_check(n * (q + 1), profile, f"3-digit base-{q} mapping of {n} spins")
    m_q = cfg.m_q
    Kq = lifted_quantize(problem, m_q)

    copies = [list(range(n + i * q, n + (i + 1) * q)) for i in range(n)]
    groups = [[i] + copies[i] for i in range(n)]
    K = np.zeros((n * (q + 1), n * (q + 1)), dtype=np.int64)
    terms = {}
    for i, j in zip(*np.nonzero(Kq)):
        a, b, c = digit_decompose_3(Kq[i, j], q)
        terms[f"{i},{j}"] = {"a": a, "b": b, "c": c}
        if a:
            K[np.ix_(copies[i], copies[j])] += a
        if b:
            K[copies[i], j] += b
        K[i, j] += c
    _add_penalties(K, groups, weight)

    plan = MappingPlan(
        n_original=n,
        groups=groups,
        digits=3,
        q=q,
        m_q=m_q,
        penalty_weight=weight,
        quantized=Kq,
        edge_terms=terms,
    )
    return _finish(K, profile), plan


def _fill(K: np.ndarray, slots, value: int, c_max: int) -> int:
    """Spread ``value`` over directed ``slots`` without exceeding ``c_max``.

    Returns the part that did not fit.
    """
    sign = 1 if value > 0 else -1
    left = abs(value)
    for a, b in slots:
        if not left:
            break
        room = c_max - sign * int(K[a, b])
        take = min(left, room)
        if take > 0:
            K[a, b] += sign * take
            left -= take
    return sign * left


def map_two_digit(
    problem: IsingProblem, profile: HardwareProfile, cfg: MultiDigitConfig
) -> Tuple[DeviceProgram, MappingPlan]:
    """Compile with two base-``q`` digits and factorized replica blocks.

    Replicas are shared across edges: spin ``i`` gets as many replicas as its
    most demanding incident edge. Residual couplings go on the original pair
    first and spill onto other replica pairs of the same two groups when an
    entry is already near ``c_max``; if every slot is full, the smaller group
    gets one more replica.
    """
    if cfg.digits != 2:
        raise ValueError("map_two_digit needs digits == 2")
    weight = cfg.resolve(profile)
    n, q, c_max = problem.n, cfg.q, profile.c_max
    m_q = cfg.m_q
    Kq = lifted_quantize(problem, m_q)

    terms = {}
    facts = {}
    need = [1] * n
    for i, j in zip(*np.nonzero(Kq)):
        f, g = digit_decompose_2(Kq[i, j], q)
        if f == 0:
            terms[f"{i},{j}"] = {"formulation": "direct", "residual": g}
            continue
        fac = factorize_min_copies(f, q, c_max, g)
        facts[i, j] = fac
        terms[f"{i},{j}"] = {
            "formulation": fac.formulation,
            "alpha": fac.alpha,
            "beta": fac.beta,
            "gamma": fac.gamma,
            "residual": fac.residual,
        }
        need[i] = max(need[i], fac.beta)
        need[j] = max(need[j], fac.gamma)

    pairs = sorted({(min(i, j), max(i, j)) for i, j in zip(*np.nonzero(Kq))})
    while True:
        _budget_check(sum(need), profile, f"2-digit base-{q} mapping of {n} spins")
        groups, K, short = _layout_two_digit(n, need, Kq, facts, pairs, c_max)
        if short is None:
            break
        # Residuals did not fit; one more replica opens fresh slots.
        i, j = short
        need[i if need[i] <= need[j] else j] += 1

    _add_penalties(K, groups, weight)
    plan = MappingPlan(
        n_original=n,
        groups=groups,
        digits=2,
        q=q,
        m_q=m_q,
        penalty_weight=weight,
        quantized=Kq,
        edge_terms=terms,
    )
    return _finish(K, profile), plan


def _layout_two_digit(n, need, Kq, facts, pairs, c_max):
    groups = []
    nxt = n
    for i in range(n):
        groups.append([i] + list(range(nxt, nxt + need[i] - 1)))
        nxt += need[i] - 1
    K = np.zeros((nxt, nxt), dtype=np.int64)
    for (i, j), fac in facts.items():
        K[np.ix_(groups[i][: fac.beta], groups[j][: fac.gamma])] += fac.alpha
    for i, j in pairs:
        fwd = [(a, b) for a in groups[i] for b in groups[j]]
        bwd = [(b, a) for a, b in fwd]
        for src, dst, order in ((i, j, fwd + bwd), (j, i, bwd + fwd)):
            if not Kq[src, dst]:
                continue
            fac = facts.get((src, dst))
            residual = int(Kq[src, dst]) if fac is None else fac.residual
            if residual and _fill(K, order, residual, c_max):
                return groups, K, (i, j)
    return groups, K, None


def map_problem(
    problem: IsingProblem, profile: HardwareProfile, cfg: MultiDigitConfig
) -> Tuple[DeviceProgram, MappingPlan]:
    if cfg.digits == 3:
        return map_three_digit(problem, profile, cfg)
    return map_two_digit(problem, profile, cfg)


def native_plan(problem: IsingProblem, profile: HardwareProfile, quantized: np.ndarray) -> MappingPlan:
    """Identity plan for the one-spin-per-variable native mapping."""
    return MappingPlan(
        n_original=problem.n,
        groups=[[i] for i in range(problem.n)],
        digits=1,
        q=None,
        m_q=profile.c_max,
        penalty_weight=0,
        quantized=np.asarray(quantized, dtype=np.int64),
    )


def decode(device_config, plan: MappingPlan) -> np.ndarray:
    """Majority vote over each replica group; an exact tie keeps the original."""
    s = as_spins(device_config, plan.n_device)
    out = np.empty(plan.n_original, dtype=np.int8)
    for i, g in enumerate(plan.groups):
        total = int(s[g].astype(np.int64).sum())
        out[i] = s[g[0]] if total == 0 else (1 if total > 0 else -1)
    return out


def coherent_extend(config, plan: MappingPlan) -> np.ndarray:
    """Device config with every replica set to its original's value."""
    s = as_spins(config, plan.n_original)
    out = np.empty(plan.n_device, dtype=np.int8)
    for i, g in enumerate(plan.groups):
        out[g] = s[i]
    return out


def coherence_violations(device_config, plan: MappingPlan) -> int:
    """Number of groups whose replicas do not all agree."""
    s = as_spins(device_config, plan.n_device)
    return sum(1 for g in plan.groups if len(set(s[g].tolist())) > 1)
