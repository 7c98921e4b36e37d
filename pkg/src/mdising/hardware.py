"""Precision-limited Ising hardware: profiles, integer device programs and
the native ceil/floor quantization baseline.

A device program is solved as ``argmin -sum_{i != j} K[i, j] s_i s_j`` with
every directed entry an integer in ``[-c_max, c_max]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Union

import numpy as np

from .errors import BudgetError, DimensionError, NormalizationError, ParseError
from .ising import IsingProblem, as_spins

__all__ = [
    "HardwareProfile",
    "COBI",
    "DeviceProgram",
    "Violation",
    "native_quantize",
    "split_pair",
    "validate",
    "program_energy",
    "read_program",
    "write_program",
    "read_profile",
    "write_profile",
    "get_profile",
    "load_profile",
    "quantize_pairs",
]

# Slack for float round-off when checking normalization.
_NORM_TOL = 1e-9


@dataclass(frozen=True)
class HardwareProfile:
    c_max: int
    max_spins: int
    name: str = "custom"

    def __post_init__(self):
        if int(self.c_max) != self.c_max or self.c_max < 1:
            raise ValueError(f"c_max must be a positive integer, got {self.c_max}")
        if int(self.max_spins) != self.max_spins or self.max_spins < 2:
            raise ValueError(f"max_spins must be an integer >= 2, got {self.max_spins}")

    @property
    def coupling_levels(self) -> int:
        """Distinct values of a pair coupling ``K_ij + K_ji``."""
        return 4 * self.c_max + 1


# 29 pair-coupling levels in [-14, 14], at most 59 spins.
COBI = HardwareProfile(c_max=7, max_spins=59, name="cobi")

_BUILTIN_PROFILES = {"cobi": COBI}


def get_profile(name: str) -> HardwareProfile:
    try:
        return _BUILTIN_PROFILES[name.lower()]
    except KeyError:
        raise KeyError(f"unknown profile {name!r}; built-in: {sorted(_BUILTIN_PROFILES)}") from None


@dataclass(frozen=True)
class DeviceProgram:
    """Integer directed coupling matrix ``K`` with a zero diagonal."""

    K: np.ndarray
    n_spins: int = field(init=False)

    def __post_init__(self):
        K = np.asarray(self.K)
        if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] < 1:
            raise DimensionError(f"K must be a non-empty square matrix, got shape {K.shape}")
        if not np.issubdtype(K.dtype, np.integer):
            if not np.all(np.isfinite(K)) or np.any(K != np.round(K)):
                raise ValueError("device couplings must be integers")
        K = K.astype(np.int64)
        K.setflags(write=False)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "n_spins", K.shape[0])

    @property
    def pair_couplings(self) -> np.ndarray:
        return self.K + self.K.T

    def __eq__(self, other):
        if not isinstance(other, DeviceProgram):
            return NotImplemented
        return np.array_equal(self.K, other.K)

    __hash__ = None


def split_pair(total2x: np.ndarray):
    """Split ``x`` into ``(ceil(x), floor(x))`` for an array of ``x``."""
    return np.ceil(total2x).astype(np.int64), np.floor(total2x).astype(np.int64)


def quantize_pairs(problem: IsingProblem, scale: int) -> np.ndarray:
    """Directed integer matrix with ``Q[i, j] = ceil(x)``, ``Q[j, i] = floor(x)``
    for ``i < j`` and ``x = scale * (J_ij + J_ji) / 2``.

    Raises:
        NormalizationError: if the problem carries linear terms or some
            ``|J_ij + J_ji|`` exceeds 2.
    """
    if problem.h is not None:
        raise NormalizationError("problem has linear terms; absorb them first")
    pair = problem.pair_couplings
    if np.abs(pair).max() > 2.0 + _NORM_TOL:
        raise NormalizationError("problem is not normalized (some |J_ij + J_ji| > 2)")
    pair = np.clip(pair, -2.0, 2.0)
    x = scale * pair / 2.0
    # Snap values within round-off of an integer so that e.g. 7 * 0.5 * 2 / 2
    # does not land on the wrong side of a ceil.
    nearest = np.round(x)
    x = np.where(np.abs(x - nearest) < 1e-9 * max(scale, 1), nearest, x)
    hi, lo = split_pair(x)
    upper = np.triu(np.ones_like(hi, dtype=bool), k=1)
    Q = np.where(upper, hi, 0) + np.where(upper.T, lo, 0)
    return Q.astype(np.int64)


def native_quantize(problem: IsingProblem, profile: HardwareProfile) -> DeviceProgram:
    """Round a normalized, field-free problem straight onto the device range."""
    if problem.n > profile.max_spins:
        raise BudgetError(
            f"problem needs {problem.n} spins, profile {profile.name!r} allows {profile.max_spins}"
        )
    return DeviceProgram(quantize_pairs(problem, profile.c_max))


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    entry: tuple = ()

    def __str__(self):
        return self.message


def validate(program: DeviceProgram, profile: HardwareProfile) -> List[Violation]:
    """Every bound the program violates; an empty list means it is valid."""
    report = []
    if program.n_spins > profile.max_spins:
        report.append(
            Violation(
                "spin_budget",
                f"program uses {program.n_spins} spins, profile allows {profile.max_spins}",
            )
        )
    K = program.K
    for i in np.flatnonzero(np.diag(K)):
        report.append(Violation("diagonal", f"nonzero diagonal entry ({i},{i}) = {K[i, i]}", (int(i), int(i))))
    for i, j in zip(*np.nonzero(np.abs(K) > profile.c_max)):
        report.append(
            Violation(
                "magnitude",
                f"entry ({i},{j}) = {K[i, j]} exceeds c_max = {profile.c_max}",
                (int(i), int(j)),
            )
        )
    return report


def program_energy(program: DeviceProgram, config) -> int:
    s = as_spins(config, program.n_spins).astype(np.int64)
    return -int(s @ program.K @ s)


def write_program(program: DeviceProgram, path: Union[str, Path]) -> None:
    out = [f"spins {program.n_spins}"]
    K = program.K
    for i, j in zip(*np.nonzero(K)):
        out.append(f"{i} {j} {K[i, j]}")
    Path(path).write_text("\n".join(out) + "\n")


def read_program(path: Union[str, Path]) -> DeviceProgram:
    """Parse ``spins N`` followed by ``i j K_ij`` lines."""
    lines = [ln.split("#", 1)[0].strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ParseError("empty program file")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "spins":
        raise ParseError(f"first line must be 'spins N', got {lines[0]!r}")
    try:
        n = int(head[1])
    except ValueError:
        raise ParseError(f"bad spin count {head[1]!r}") from None
    if n < 1:
        raise ParseError(f"spin count must be positive, got {n}")
    K = np.zeros((n, n), dtype=np.int64)
    for lineno, ln in enumerate(lines[1:], start=2):
        parts = ln.split()
        try:
            if len(parts) != 3:
                raise ValueError
            i, j, k = (int(p) for p in parts)
        except ValueError:
            raise ParseError(f"line {lineno}: expected 'i j K_ij' with integers, got {ln!r}") from None
        if not (0 <= i < n and 0 <= j < n):
            raise ParseError(f"line {lineno}: index out of range for {n} spins")
        K[i, j] += k
    return DeviceProgram(K)


def read_profile(path: Union[str, Path]) -> HardwareProfile:
    """Key-value profile file with keys ``c_max`` and ``max_spins``."""
    values = {}
    for lineno, ln in enumerate(Path(path).read_text().splitlines(), start=1):
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        key, sep, value = ln.replace(":", "=", 1).partition("=")
        if not sep:
            raise ParseError(f"line {lineno}: expected 'key = value', got {ln!r}")
        values[key.strip()] = value.strip()
    try:
        return HardwareProfile(
            c_max=int(values["c_max"]),
            max_spins=int(values["max_spins"]),
            name=values.get("name", Path(path).stem),
        )
    except KeyError as exc:
        raise ParseError(f"profile is missing key {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ParseError(f"bad profile value: {exc}") from None


def write_profile(profile: HardwareProfile, path: Union[str, Path]) -> None:
    Path(path).write_text(
        f"name = {profile.name}\nc_max = {profile.c_max}\nmax_spins = {profile.max_spins}\n"
    )


def load_profile(spec: str) -> HardwareProfile:
    """A built-in profile name or a path to a profile file."""
    if spec.lower() in _BUILTIN_PROFILES:
        return _BUILTIN_PROFILES[spec.lower()]
    return read_profile(spec)
