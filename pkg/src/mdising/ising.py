"""Real-valued Ising problems: energy, normalization, linear-term absorption
and an exhaustive ground-state oracle.

Energies follow the convention

    E(s) = -sum_{i != j} J[i, j] s_i s_j - sum_i h[i] s_i

with J stored as a full directed matrix, so the coupling seen by the pair
{i, j} is ``J[i, j] + J[j, i]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from .errors import BudgetError, DimensionError, NormalizationError, ParseError

__all__ = [
    "IsingProblem",
    "as_spins",
    "energy",
    "normalize",
    "absorb_linear_terms",
    "brute_force_ground_state",
    "enumerate_configs",
    "read_problem",
    "write_problem",
    "BRUTE_FORCE_MAX_SPINS",
]

BRUTE_FORCE_MAX_SPINS = 24

# Configs per block during exhaustive enumeration.
_CHUNK = 1 << 14


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class IsingProblem:
    """Dense Ising problem over ``n`` spins.

    Args:
        J: ``(n, n)`` directed coupling matrix. The diagonal is zeroed on
            construction since ``s_i**2 == 1`` makes it a constant.
        h: Optional length-``n`` vector of linear fields. An all-zero ``h``
            is stored as ``None``.
    """

    J: np.ndarray
    h: Optional[np.ndarray] = None
    n: int = field(init=False)

    def __post_init__(self):
        J = np.asarray(self.J, dtype=float)
        if J.ndim != 2 or J.shape[0] != J.shape[1] or J.shape[0] < 1:
            raise DimensionError(f"J must be a non-empty square matrix, got shape {J.shape}")
        if not np.all(np.isfinite(J)):
            raise ValueError("J has non-finite entries")
        J = J.copy()
        np.fill_diagonal(J, 0.0)
        n = J.shape[0]
        h = self.h
        if h is not None:
            h = np.asarray(h, dtype=float).reshape(-1)
            if h.shape != (n,):
                raise DimensionError(f"h must have length {n}, got {h.shape[0]}")
            if not np.all(np.isfinite(h)):
                raise ValueError("h has non-finite entries")
            h = _frozen(h) if np.any(h != 0) else None
        object.__setattr__(self, "J", _frozen(J))
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "n", n)

    @property
    def pair_couplings(self) -> np.ndarray:
        """Symmetric matrix of ``J[i, j] + J[j, i]``."""
        return self.J + self.J.T

    def __eq__(self, other):
        if not isinstance(other, IsingProblem):
            return NotImplemented
        if self.n != other.n or not np.array_equal(self.J, other.J):
            return False
        if self.h is None or other.h is None:
            return self.h is None and other.h is None
        return np.array_equal(self.h, other.h)

    __hash__ = None


def as_spins(config, n: Optional[int] = None) -> np.ndarray:
    """Validate a spin configuration and return it as an int8 array."""
    s = np.asarray(config)
    if s.ndim != 1:
        raise DimensionError(f"spin config must be 1-D, got shape {s.shape}")
    if n is not None and s.shape[0] != n:
        raise DimensionError(f"spin config has length {s.shape[0]}, expected {n}")
    if not np.all((s == 1) | (s == -1)):
        raise ValueError("spin values must be -1 or +1")
    return s.astype(np.int8)


def energy(problem: IsingProblem, config) -> float:
    s = as_spins(config, problem.n).astype(float)
    e = -float(s @ problem.J @ s)
    if problem.h is not None:
        e -= float(problem.h @ s)
    return e


def normalize(problem: IsingProblem) -> Tuple[IsingProblem, float]:
    """Scale a problem so every pair coupling satisfies ``|J_ij + J_ji| <= 2``
    and every field ``|h_i| <= 1``.

    Returns:
        The scaled problem and the positive divisor that was applied.
    """
    pair = np.abs(problem.pair_couplings)
    scale = float(pair.max()) / 2.0
    if problem.h is not None:
        scale = max(scale, float(np.abs(problem.h).max()))
    if scale == 0.0:
        raise NormalizationError("cannot normalize an all-zero problem")
    if scale == 1.0:
        return problem, 1.0
    h = None if problem.h is None else problem.h / scale
    return IsingProblem(problem.J / scale, h), scale


def is_normalized(problem: IsingProblem, tol: float = 1e-9) -> bool:
    if problem.n > 1 and np.abs(problem.pair_couplings).max() > 2.0 + tol:
        return False
    return problem.h is None or np.abs(problem.h).max() <= 1.0 + tol


def absorb_linear_terms(problem: IsingProblem) -> Tuple[IsingProblem, Optional[int]]:
    """Fold linear fields into couplings to an extra ancilla spin.

    The ancilla is appended as spin ``n`` and ``J'[n, i] = h[i]``. On the
    slice where the ancilla reads +1 the two problems have equal energy.

    Returns:
        The coupling-only problem and the ancilla index, or the input and
        ``None`` when there is no linear term.
    """
    if problem.h is None:
        return problem, None
    n = problem.n
    J = np.zeros((n + 1, n + 1))
    J[:n, :n] = problem.J
    J[n, :n] = problem.h
    return IsingProblem(J), n


def enumerate_configs(n: int, start: int = 0, stop: Optional[int] = None) -> np.ndarray:
    """Spin configs with index ``start..stop-1`` in lexicographic order.

    Index ``k`` maps spin ``i`` to -1 when bit ``n-1-i`` of ``k`` is set, so
    increasing ``k`` walks configs lexicographically with +1 before -1.
    """
    if stop is None:
        stop = 1 << n
    k = np.arange(start, stop, dtype=np.int64)[:, None]
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)[None, :]
    bits = (k >> shifts) & 1
    return (1 - 2 * bits).astype(np.int8)


def brute_force_ground_state(problem: IsingProblem) -> Tuple[np.ndarray, float]:
    """Exhaustive minimum over all ``2**n`` configs.

    Ties (within floating-point round-off) resolve to the lexicographically
    smallest config, reading +1 before -1 from index 0.
    """
    n = problem.n
    if n > BRUTE_FORCE_MAX_SPINS:
        raise BudgetError(f"brute force limited to {BRUTE_FORCE_MAX_SPINS} spins, got {n}")
    J = problem.J
    h = problem.h
    tol = 1e-12 * (np.abs(J).sum() + (0.0 if h is None else np.abs(h).sum()) + 1.0)
    best_k, best_e = -1, np.inf
    total = 1 << n
    for start in range(0, total, _CHUNK):
        S = enumerate_configs(n, start, min(start + _CHUNK, total)).astype(float)
        e = -np.einsum("ki,ki->k", S @ J, S)
        if h is not None:
            e -= S @ h
        idx = int(np.argmin(e))
        # Only a strictly better block minimum displaces an earlier one.
        if e[idx] < best_e - tol:
            best_e = float(e[idx])
            best_k = start + int(np.flatnonzero(e <= e[idx] + tol)[0])
    config = enumerate_configs(n, best_k, best_k + 1)[0]
    return config, energy(problem, config)


def read_problem(path: Union[str, Path]) -> IsingProblem:
    """Parse the plain-text problem format.

    First line ``n``; then ``i j J_ij`` lines and optional ``h i value``
    lines, all 0-based. Blank lines and ``#`` comments are skipped.
    """
    lines = [ln.split("#", 1)[0].strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ParseError("empty problem file")
    try:
        n = int(lines[0])
    except ValueError:
        raise ParseError(f"first line must be the spin count, got {lines[0]!r}") from None
    if n < 1:
        raise ParseError(f"spin count must be positive, got {n}")
    J = np.zeros((n, n))
    h = np.zeros(n)
    for lineno, ln in enumerate(lines[1:], start=2):
        parts = ln.split()
        try:
            if parts[0] == "h":
                if len(parts) != 3:
                    raise ValueError
                i, value = int(parts[1]), float(parts[2])
                _check_index(i, n, lineno)
                h[i] += value
            else:
                if len(parts) != 3:
                    raise ValueError
                i, j, value = int(parts[0]), int(parts[1]), float(parts[2])
                _check_index(i, n, lineno)
                _check_index(j, n, lineno)
                if i == j:
                    raise ParseError(f"line {lineno}: diagonal entry ({i}, {i})")
                J[i, j] += value
        except ParseError:
            raise
        except ValueError:
            raise ParseError(f"line {lineno}: cannot parse {ln!r}") from None
    return IsingProblem(J, h)


def _check_index(i: int, n: int, lineno: int) -> None:
    if not 0 <= i < n:
        raise ParseError(f"line {lineno}: index {i} out of range for {n} spins")


def write_problem(problem: IsingProblem, path: Union[str, Path]) -> None:
    out = [str(problem.n)]
    for i, j in zip(*np.nonzero(problem.J)):
        out.append(f"{i} {j} {float(problem.J[i, j])!r}")
    if problem.h is not None:
        for i in np.flatnonzero(problem.h):
            out.append(f"h {i} {float(problem.h[i])!r}")
    Path(path).write_text("\n".join(out) + "\n")
