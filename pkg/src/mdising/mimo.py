"""MIMO detection as an Ising problem.

The receive model is ``y = H x + n`` with complex ``H`` (n_r x n_t). Working
on the real decomposition ``y_r = [Re y; Im y]``, ``H_r = [[Re H, -Im H],
[Im H, Re H]]`` and a linear spin encoding ``u = D s`` of the real symbol
amplitudes, maximum-likelihood detection

    argmin_u ||y_r - H_r u||^2

becomes an Ising problem with ``J = -offdiag(D' H_r' H_r D)`` and
``h = 2 D' H_r' y_r``; the two objectives differ by a constant.

Bit labels are Gray coded per real dimension::

    16-QAM   bits 00 01 11 10  ->  -3 -1 +1 +3
    4-QAM    bit  0  1         ->  -1 +1
    BPSK     bit  0  1         ->  -1 +1   (real axis only)
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple, Union

import numpy as np

from .anneal import AnnealParams, solve, solve_exact
from .errors import BudgetError
from .hardware import COBI, HardwareProfile, native_quantize
from .ising import IsingProblem, absorb_linear_terms, brute_force_ground_state, normalize
from .multidigit import MultiDigitConfig, coherence_violations, decode, map_problem, native_plan

__all__ = [
    "Constellation",
    "CONSTELLATIONS",
    "get_constellation",
    "MimoInstance",
    "SpinEncoding",
    "generate_instance",
    "mld_to_ising",
    "mld_oracle",
    "PipelineConfig",
    "Detection",
    "detect",
    "device_to_bits",
    "ber",
    "instance_to_json",
    "instance_from_json",
]

MLD_MAX_CANDIDATES = 10**6


@dataclass(frozen=True)
class Constellation:
    """Square QAM (or BPSK) with independent Gray labels per real dimension.

    ``gray`` maps each per-dimension bit tuple to its amplitude.
    """

    name: str
    gray: Dict[Tuple[int, ...], int]
    complex_valued: bool = True

    @property
    def bits_per_dim(self) -> int:
        return len(next(iter(self.gray)))

    @property
    def dims_per_symbol(self) -> int:
        return 2 if self.complex_valued else 1

    @property
    def bits_per_symbol(self) -> int:
        return self.bits_per_dim * self.dims_per_symbol

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array(sorted(self.gray.values()))

    @property
    def symbols(self) -> np.ndarray:
        """Every symbol, indexed by its bit label read as a binary number."""
        out = []
        for label in range(2**self.bits_per_symbol):
            bits = [(label >> (self.bits_per_symbol - 1 - k)) & 1 for k in range(self.bits_per_symbol)]
            out.append(self.modulate(np.array(bits))[0])
        return np.array(out)

    def modulate(self, bits) -> np.ndarray:
        bits = np.asarray(bits, dtype=int).reshape(-1, self.dims_per_symbol, self.bits_per_dim)
        amps = np.array([[self.gray[tuple(d)] for d in sym] for sym in bits], dtype=float)
        if self.complex_valued:
            return amps[:, 0] + 1j * amps[:, 1]
        return amps[:, 0].astype(complex)

    def demodulate(self, amplitudes) -> np.ndarray:
        """Bits for a sequence of real amplitudes, already per dimension."""
        inverse = {a: b for b, a in self.gray.items()}
        return np.array([b for a in amplitudes for b in inverse[int(a)]], dtype=np.uint8)


CONSTELLATIONS = {
    "BPSK": Constellation("BPSK", {(0,): -1, (1,): 1}, complex_valued=False),
    "4-QAM": Constellation("4-QAM", {(0,): -1, (1,): 1}),
    "16-QAM": Constellation("16-QAM", {(0, 0): -3, (0, 1): -1, (1, 1): 1, (1, 0): 3}),
}

_ALIASES = {"QPSK": "4-QAM", "4QAM": "4-QAM", "16QAM": "16-QAM"}


def get_constellation(name: Union[str, Constellation]) -> Constellation:
    if isinstance(name, Constellation):
        return name
    key = _ALIASES.get(name.upper(), name.upper())
    try:
        return CONSTELLATIONS[key]
    except KeyError:
        raise ValueError(f"unsupported constellation {name!r}; choose from {sorted(CONSTELLATIONS)}") from None


@dataclass(frozen=True)
class MimoInstance:
    n_t: int
    n_r: int
    H: np.ndarray
    x: np.ndarray
    y: np.ndarray
    noise_variance: float
    tx_bits: np.ndarray
    constellation: Constellation

    @property
    def n_bits(self) -> int:
        return self.tx_bits.shape[0]


def generate_instance(
    n_t: int,
    n_r: int,
    constellation: Union[str, Constellation] = "16-QAM",
    noise_variance: float = 0.0,
    seed: int = 0,
) -> MimoInstance:
    """Rayleigh channel (unit-variance complex Gaussian entries), uniform bits."""
    if n_t < 1 or n_r < 1:
        raise ValueError("antenna counts must be positive")
    if noise_variance < 0:
        raise ValueError("noise_variance must be nonnegative")
    const = get_constellation(constellation)
    rng = np.random.default_rng(seed)
    H = (rng.standard_normal((n_r, n_t)) + 1j * rng.standard_normal((n_r, n_t))) / np.sqrt(2)
    bits = rng.integers(0, 2, size=n_t * const.bits_per_symbol).astype(np.uint8)
    x = const.modulate(bits)
    y = H @ x
    if noise_variance > 0:
        y = y + np.sqrt(noise_variance / 2) * (
            rng.standard_normal(n_r) + 1j * rng.standard_normal(n_r)
        )
    return MimoInstance(n_t, n_r, H, x, y, float(noise_variance), bits, const)


def _real_model(inst: MimoInstance):
    H, y = inst.H, inst.y
    y_r = np.concatenate([y.real, y.imag])
    if inst.constellation.complex_valued:
        H_r = np.block([[H.real, -H.imag], [H.imag, H.real]])
    else:
        H_r = np.vstack([H.real, H.imag])
    return H_r, y_r


@dataclass(frozen=True)
class SpinEncoding:
    """Linear map ``u = D s`` from spins to real symbol amplitudes.

    Spins are ordered most-significant weight first: for 16-QAM the ``2 s_a``
    spins of all real dimensions, then the ``s_b`` spins.
    """

    D: np.ndarray
    n_t: int
    constellation: Constellation
    constant: float

    def spins_to_real(self, spins) -> np.ndarray:
        return self.D @ np.asarray(spins, dtype=float)

    def spins_to_symbols(self, spins) -> np.ndarray:
        u = self.spins_to_real(spins)
        if self.constellation.complex_valued:
            return u[: self.n_t] + 1j * u[self.n_t :]
        return u.astype(complex)

    def spins_to_bits(self, spins) -> np.ndarray:
        u = np.rint(self.spins_to_real(spins)).astype(int)
        if self.constellation.complex_valued:
            # Per symbol: real dimension bits, then imaginary.
            u = np.stack([u[: self.n_t], u[self.n_t :]], axis=1).reshape(-1)
        return self.constellation.demodulate(u)

    def symbols_to_spins(self, symbols) -> np.ndarray:
        symbols = np.asarray(symbols)
        u = np.concatenate([symbols.real, symbols.imag]) if self.constellation.complex_valued else symbols.real
        m = self.constellation.bits_per_dim
        # u = sum_k 2**(m-1-k) s_k with each s_k = +-1; peel off greedily.
        spins = []
        rest = u.astype(float).copy()
        for k in range(m):
            w = 2 ** (m - 1 - k)
            s = np.where(rest > 0, 1, -1)
            spins.append(s)
            rest = rest - w * s
        return np.concatenate(spins).astype(np.int8)


def mld_to_ising(inst: MimoInstance) -> Tuple[IsingProblem, SpinEncoding]:
    """Ising problem whose energy plus ``encoding.constant`` equals the
    squared receive residual for every spin config."""
    H_r, y_r = _real_model(inst)
    dims = H_r.shape[1]
    m = inst.constellation.bits_per_dim
    D = np.hstack([2 ** (m - 1 - k) * np.eye(dims) for k in range(m)])
    HD = H_r @ D
    G = HD.T @ HD
    J = -G.copy()
    np.fill_diagonal(J, 0.0)
    h = 2.0 * HD.T @ y_r
    constant = float(y_r @ y_r + np.trace(G))
    return IsingProblem(J, h), SpinEncoding(D, inst.n_t, inst.constellation, constant)


def mld_oracle(inst: MimoInstance) -> Tuple[np.ndarray, np.ndarray]:
    """Exhaustive maximum-likelihood detection.

    Returns:
        ``(x_hat, bits)``. Ties go to the lexicographically smallest tuple
        of symbol indices.
    """
    symbols = inst.constellation.symbols
    M = symbols.shape[0]
    if M**inst.n_t > MLD_MAX_CANDIDATES:
        raise BudgetError(f"{M}**{inst.n_t} candidates exceed the budget of {MLD_MAX_CANDIDATES}")
    idx = np.array(list(itertools.product(range(M), repeat=inst.n_t)), dtype=np.int64)
    U = symbols[idx]  # (candidates, n_t)
    resid = inst.y[None, :] - U @ inst.H.T
    norms = np.sum(np.abs(resid) ** 2, axis=1)
    tol = 1e-12 * (float(np.abs(inst.y) @ np.abs(inst.y)) + 1.0)
    best = int(np.flatnonzero(norms <= norms.min() + tol)[0])
    labels = idx[best]
    nb = inst.constellation.bits_per_symbol
    bits = np.array(
        [(lab >> (nb - 1 - k)) & 1 for lab in labels for k in range(nb)], dtype=np.uint8
    )
    return U[best], bits


@dataclass(frozen=True)
class PipelineConfig:
    """How a detection run maps and solves the Ising problem.

    ``mapping`` is ``"float"`` (no quantization, exact solve of the real
    problem), ``"native"``, or a :class:`MultiDigitConfig`.
    """

    mapping: Union[str, MultiDigitConfig] = "native"
    profile: HardwareProfile = COBI
    anneal: AnnealParams = field(default_factory=AnnealParams)
    exact: bool = False

    def __post_init__(self):
        if isinstance(self.mapping, str) and self.mapping not in ("float", "native"):
            raise ValueError(f"unknown mapping {self.mapping!r}")


@dataclass
class Detection:
    bits: np.ndarray
    spins: np.ndarray
    solver_energy: float
    coherence_violations: int
    spins_used: int


def device_to_bits(device_config, plan, ancilla: Optional[int], encoding: SpinEncoding, n_logical: int):
    """Decode a device config, gauge it so the ancilla reads +1, and read bits."""
    s = decode(device_config, plan)
    if ancilla is not None and s[ancilla] < 0:
        s = -s
    s = s[:n_logical]
    return encoding.spins_to_bits(s), s


def detect(inst: MimoInstance, cfg: PipelineConfig) -> Detection:
    problem, enc = mld_to_ising(inst)
    normed, _ = normalize(problem)
    flat, ancilla = absorb_linear_terms(normed)

    if cfg.mapping == "float":
        s, e = brute_force_ground_state(flat)
        if ancilla is not None and s[ancilla] < 0:
            s = -s
        s = s[: problem.n]
        return Detection(enc.spins_to_bits(s), s, float(e), 0, flat.n)

    if cfg.mapping == "native":
        program = native_quantize(flat, cfg.profile)
        plan = native_plan(flat, cfg.profile, program.K)
    else:
        program, plan = map_problem(flat, cfg.profile, cfg.mapping)

    if cfg.exact:
        device, e = solve_exact(program)
    else:
        result = solve(program, cfg.anneal)
        device, e = result.config, result.energy
    bits, s = device_to_bits(device, plan, ancilla, enc, problem.n)
    return Detection(bits, s, float(e), coherence_violations(device, plan), program.n_spins)


def ber(tx_bits, rx_bits) -> float:
    tx = np.asarray(tx_bits).reshape(-1)
    rx = np.asarray(rx_bits).reshape(-1)
    if tx.shape != rx.shape:
        raise ValueError(f"bit strings differ in length: {tx.shape[0]} vs {rx.shape[0]}")
    if tx.size == 0:
        raise ValueError("empty bit strings")
    return float(np.count_nonzero(tx != rx)) / tx.size


def _cpairs(a) -> list:
    a = np.asarray(a)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def instance_to_json(inst: MimoInstance) -> str:
    """Complex values are written as ``[re, im]`` pairs."""
    return json.dumps(
        {
            "n_t": inst.n_t,
            "n_r": inst.n_r,
            "constellation": inst.constellation.name,
            "noise_variance": inst.noise_variance,
            "H": _cpairs(inst.H),
            "x": _cpairs(inst.x),
            "y": _cpairs(inst.y),
            "tx_bits": [int(b) for b in inst.tx_bits],
        },
        sort_keys=True,
    )


def instance_from_json(text: str) -> MimoInstance:
    d = json.loads(text)

    def cplx(v):
        a = np.asarray(v, dtype=float)
        return a[..., 0] + 1j * a[..., 1]

    return MimoInstance(
        n_t=int(d["n_t"]),
        n_r=int(d["n_r"]),
        H=cplx(d["H"]),
        x=cplx(d["x"]),
        y=cplx(d["y"]),
        noise_variance=float(d["noise_variance"]),
        tx_bits=np.asarray(d["tx_bits"], dtype=np.uint8),
        constellation=get_constellation(d["constellation"]),
    )
