"""BER experiments comparing mapping arms on shared channel realizations.

A spec file is ``key = value`` text; ``arm`` may repeat::

    scenario = mimo-ber
    n_t = 2
    n_r = 2
    constellation = 16-QAM
    trials = 500
    seed = 1
    profile = cobi
    n_anneals = 50
    sweeps = 200
    arm = native
    arm = multidigit digits=3 q=5

Trial ``t`` draws its channel and anneal seeds from ``(seed, t)``, so every
arm sees the same instances and rows come out in trial order whatever the
worker count.
"""
from __future__ import annotations

import csv
import io
import json
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from .anneal import AnnealParams
from .errors import BoundError, BudgetError, ParseError
from .hardware import HardwareProfile, load_profile
from .mimo import PipelineConfig, detect, generate_instance, get_constellation
from .multidigit import MultiDigitConfig

__all__ = ["Arm", "ExperimentSpec", "parse_spec", "trial_seed", "run_experiment", "CSV_COLUMNS"]

CSV_COLUMNS = [
    "trial_seed",
    "n_t",
    "n_r",
    "constellation",
    "mapping",
    "q",
    "digits",
    "spins_used",
    "solver_energy",
    "coherence_violations",
    "bit_errors",
    "bits_total",
]

SCENARIOS = ("map", "solve", "mimo-ber")


@dataclass(frozen=True)
class Arm:
    """One mapping under test: ``float``, ``native`` or multi-digit."""

    kind: str
    digits: Optional[int] = None
    q: Optional[int] = None
    penalty_weight: Optional[int] = None

    @property
    def name(self) -> str:
        if self.kind != "multidigit":
            return self.kind
        name = f"{self.digits}d-q{self.q}"
        return name if self.penalty_weight is None else f"{name}-p{self.penalty_weight}"

    def mapping(self):
        if self.kind == "multidigit":
            return MultiDigitConfig(self.digits, self.q, self.penalty_weight)
        return self.kind

    def to_text(self) -> str:
        if self.kind != "multidigit":
            return self.kind
        out = f"multidigit digits={self.digits} q={self.q}"
        if self.penalty_weight is not None:
            out += f" penalty_weight={self.penalty_weight}"
        return out

    @classmethod
    def parse(cls, text: str) -> "Arm":
        parts = text.split()
        if not parts:
            raise ParseError("empty arm")
        kind = parts[0].lower()
        if kind in ("float", "native"):
            if len(parts) > 1:
                raise ParseError(f"arm {kind!r} takes no options")
            return cls(kind)
        if kind != "multidigit":
            raise ParseError(f"unknown arm kind {parts[0]!r}")
        opts = {}
        for p in parts[1:]:
            k, sep, v = p.partition("=")
            if not sep or k not in ("digits", "q", "penalty_weight"):
                raise ParseError(f"bad arm option {p!r}")
            try:
                opts[k] = int(v)
            except ValueError:
                raise ParseError(f"arm option {k} must be an integer, got {v!r}") from None
        if "digits" not in opts or "q" not in opts:
            raise ParseError("multidigit arm needs digits= and q=")
        if opts["digits"] not in (2, 3):
            raise ParseError("digits must be 2 or 3")
        return cls("multidigit", **opts)


@dataclass(frozen=True)
class ExperimentSpec:
    scenario: str = "mimo-ber"
    n_t: int = 2
    n_r: int = 2
    constellation: str = "16-QAM"
    noise_variance: float = 0.0
    trials: int = 100
    seed: int = 0
    profile: str = "cobi"
    n_anneals: int = 50
    sweeps: int = 200
    beta_initial: float = AnnealParams.beta_initial
    beta_final: float = AnnealParams.beta_final
    exact: bool = False
    arms: List[Arm] = field(default_factory=lambda: [Arm("native")])

    def to_text(self) -> str:
        """Canonical spec text; parsing it back gives an equal spec."""
        lines = [
            f"scenario = {self.scenario}",
            f"n_t = {self.n_t}",
            f"n_r = {self.n_r}",
            f"constellation = {self.constellation}",
            f"noise_variance = {self.noise_variance!r}",
            f"trials = {self.trials}",
            f"seed = {self.seed}",
            f"profile = {self.profile}",
            f"n_anneals = {self.n_anneals}",
            f"sweeps = {self.sweeps}",
            f"beta_initial = {self.beta_initial!r}",
            f"beta_final = {self.beta_final!r}",
            f"exact = {str(self.exact).lower()}",
        ]
        lines += [f"arm = {a.to_text()}" for a in self.arms]
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "arms"}
        d["arms"] = [a.to_text() for a in self.arms]
        return d


_INT_KEYS = {"n_t", "n_r", "trials", "seed", "n_anneals", "sweeps"}
_FLOAT_KEYS = {"noise_variance", "beta_initial", "beta_final"}


def parse_spec(text: str) -> ExperimentSpec:
    values = {}
    arms = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        ln = raw.split("#", 1)[0].strip()
        if not ln:
            continue
        key, sep, value = ln.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ParseError(f"line {lineno}: expected 'key = value', got {raw!r}")
        try:
            if key == "arm":
                arms.append(Arm.parse(value))
            elif key in _INT_KEYS:
                values[key] = int(value)
            elif key in _FLOAT_KEYS:
                values[key] = float(value)
            elif key == "exact":
                if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                    raise ValueError(value)
                values[key] = value.lower() in ("true", "1", "yes")
            elif key in ("scenario", "constellation", "profile"):
                values[key] = value
            else:
                raise ParseError(f"line {lineno}: unknown key {key!r}")
        except ParseError:
            raise
        except ValueError:
            raise ParseError(f"line {lineno}: bad value for {key}: {value!r}") from None
    if arms:
        values["arms"] = arms
    spec = ExperimentSpec(**values)
    if spec.scenario not in SCENARIOS:
        raise ParseError(f"unknown scenario {spec.scenario!r}")
    if spec.trials < 0:
        raise ParseError("trials must be >= 0")
    if spec.n_t < 1 or spec.n_r < 1:
        raise ParseError("antenna counts must be positive")
    try:
        get_constellation(spec.constellation)
    except ValueError as exc:
        raise ParseError(str(exc)) from None
    return spec


def trial_seed(master: int, t: int) -> int:
    seq = np.random.SeedSequence(master, spawn_key=(t,))
    return int(seq.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def _run_trial(args):
    spec, profile, t = args
    seed = trial_seed(spec.seed, t)
    inst = generate_instance(spec.n_t, spec.n_r, spec.constellation, spec.noise_variance, seed)
    params = AnnealParams(spec.n_anneals, spec.sweeps, spec.beta_initial, spec.beta_final, seed)
    out = []
    with warnings.catch_warnings():
        # q == c_max + 1 is a deliberate experimental setting.
        warnings.simplefilter("ignore")
        for arm in spec.arms:
            cfg = PipelineConfig(arm.mapping(), profile, params, exact=spec.exact)
            try:
                d = detect(inst, cfg)
            except (BudgetError, BoundError) as exc:
                out.append((arm.name, None, str(exc)))
                continue
            e = d.solver_energy
            row = {
                "trial_seed": seed,
                "n_t": spec.n_t,
                "n_r": spec.n_r,
                "constellation": inst.constellation.name,
                "mapping": arm.kind,
                "q": "" if arm.q is None else arm.q,
                "digits": "" if arm.digits is None else arm.digits,
                "spins_used": d.spins_used,
                "solver_energy": int(e) if float(e).is_integer() else repr(float(e)),
                "coherence_violations": d.coherence_violations,
                "bit_errors": int(np.count_nonzero(d.bits != inst.tx_bits)),
                "bits_total": inst.n_bits,
            }
            out.append((arm.name, row, None))
    return out


def _summarize(spec: ExperimentSpec, results) -> dict:
    arms = {}
    for arm in spec.arms:
        arms[arm.name] = {
            "mapping": arm.kind,
            "digits": arm.digits,
            "q": arm.q,
            "penalty_weight": arm.penalty_weight,
            "trials_run": 0,
            "budget_failures": 0,
            "errors": [],
            "bit_errors": 0,
            "bits_total": 0,
            "_incoherent": 0,
            "_spins": 0,
        }
    for trial in results:
        for name, row, err in trial:
            a = arms[name]
            if row is None:
                a["budget_failures"] += 1
                if err not in a["errors"]:
                    a["errors"].append(err)
                continue
            a["trials_run"] += 1
            a["bit_errors"] += row["bit_errors"]
            a["bits_total"] += row["bits_total"]
            a["_incoherent"] += row["coherence_violations"] > 0
            a["_spins"] += row["spins_used"]
    for a in arms.values():
        n = a["trials_run"]
        incoherent, spins = a.pop("_incoherent"), a.pop("_spins")
        a["ber"] = a["bit_errors"] / a["bits_total"] if a["bits_total"] else None
        a["coherence_violation_rate"] = incoherent / n if n else None
        a["mean_spins"] = spins / n if n else None
    return {
        "spec": spec.to_dict(),
        "no_data": spec.trials == 0 or all(a["trials_run"] == 0 for a in arms.values()),
        "arms": arms,
    }


def run_experiment(
    spec: ExperimentSpec,
    output_dir: Union[str, Path, None] = None,
    jobs: int = 1,
    profile: Optional[HardwareProfile] = None,
):
    """Run every trial of every arm.

    Returns:
        ``(rows, summary)``. When ``output_dir`` is given, also writes
        ``results.csv`` and ``summary.json`` there.
    """
    if spec.scenario != "mimo-ber":
        raise ParseError(f"run_experiment handles scenario 'mimo-ber', got {spec.scenario!r}")
    if profile is None:
        profile = load_profile(spec.profile)
    work = [(spec, profile, t) for t in range(spec.trials)]
    if jobs > 1 and spec.trials > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_trial, work, chunksize=max(1, spec.trials // (4 * jobs))))
    else:
        results = [_run_trial(w) for w in work]

    rows = [row for trial in results for _, row, _ in trial if row is not None]
    summary = _summarize(spec, results)
    if output_dir is not None:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "results.csv").write_text(rows_to_csv(rows))
        (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    return rows, summary


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def with_seed(spec: ExperimentSpec, seed: Optional[int]) -> ExperimentSpec:
    return spec if seed is None else replace(spec, seed=seed)
