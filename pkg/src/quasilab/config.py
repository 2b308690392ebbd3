"""JSON experiment configuration.

One object per run::

    {
      "experiment": "gordon-check",
      "frequencies": [{"rule": "constant", "value": 1}],
      "potential": {"family": "trig_polynomial", "terms": [{"k": [1], "cos": 2.0}]},
      "phase": [0.1],
      "taus": [[3], [5], [8]],
      "gamma": 1.0, "delta": 0.5,
      "mc": {"samples": 100000, "seed": 0}
    }

Keys outside :data:`FIELDS` are rejected, as are keys that the chosen
experiment does not read.  Everything is validated before any work starts.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from .contfrac import Frequency
from .errors import ConfigError, QuasilabError
from .freqcond import FrequencyVector
from .montecarlo import MCParams
from .potential import PotentialSpec

EXPERIMENTS = ("freq-search", "interleave", "measure-zero", "measure-probe",
               "gordon-check", "spectrum", "transport")
PROBES = ("f-set", "e-set", "kappa", "m-tau", "z-tau")
MC_KEYS = {"samples", "seed", "chunk_size", "threads", "confidence"}

# keys each experiment may use, beyond "experiment", "mc" and "output"
ALLOWED = {
    "freq-search": {"frequencies", "target", "budget"},
    "interleave": {"frequencies", "epsilon", "depth"},
    "measure-zero": {"m", "epsilon", "repetitions", "cutoff"},
    "measure-probe": {"probe", "potential", "frequencies", "epsilon", "eta", "M", "y",
                      "tau", "gamma", "delta"},
    "gordon-check": {"potential", "frequencies", "phase", "tau", "taus", "gamma", "delta",
                     "lambda0", "rho_mode", "max_sites"},
    "spectrum": {"potential", "frequencies", "phase", "sides", "bc", "want_vectors",
                 "dump_vectors", "dense_cap"},
    "transport": {"potential", "frequencies", "phase", "sides", "bc", "times",
                  "disorder", "initial_site"},
}


@dataclass
class ExperimentConfig:
    experiment: str
    frequencies: list[dict] | None = None
    potential: dict | None = None
    phase: list[float] | None = None
    probe: str | None = None
    target: float | None = None
    budget: int = 25
    depth: int = 25
    epsilon: float | None = None
    eta: float | None = None
    M: float | None = None
    y: list[float] | None = None
    m: list[int] | None = None
    repetitions: int = 1
    cutoff: int | None = None
    tau: list[int] | None = None
    taus: list[list[int]] | None = None
    gamma: float | None = None
    delta: float | None = None
    lambda0: float | None = None
    rho_mode: str = "auto"
    max_sites: int = 200_000
    sides: list[int] | None = None
    bc: str = "dirichlet"
    want_vectors: bool = False
    dump_vectors: bool = False
    dense_cap: int = 4096
    times: list[float] | None = None
    disorder: dict | None = None
    initial_site: list[int] | None = None
    mc: dict = field(default_factory=dict)
    output: str | None = None

    @classmethod
    def from_dict(cls, raw: dict, experiment: str | None = None) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        raw = dict(raw)
        kind = raw.get("experiment", experiment)
        if experiment is not None and kind != experiment:
            raise ConfigError(f"config is for {kind!r}, subcommand is {experiment!r}")
        raw["experiment"] = kind
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        cfg = cls(**raw)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path, experiment: str | None = None) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(raw, experiment)

    def to_dict(self) -> dict:
        """Only the keys that were set, so the echo re-validates."""
        out = {}
        default = ExperimentConfig(self.experiment)
        for f in fields(self):
            val = getattr(self, f.name)
            if f.name == "experiment" or val != getattr(default, f.name):
                out[f.name] = val
        return out

    # -- validation ---------------------------------------------------------
    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        default = ExperimentConfig(self.experiment)
        extra = [f.name for f in fields(self)
                 if f.name not in ("experiment", "mc", "output")
                 and getattr(self, f.name) != getattr(default, f.name)
                 and f.name not in ALLOWED[self.experiment]]
        if extra:
            raise ConfigError(f"keys not used by {self.experiment}: {sorted(extra)}")
        bad_mc = sorted(set(self.mc) - MC_KEYS)
        if bad_mc:
            raise ConfigError(f"unknown mc keys: {bad_mc}")
        try:
            self.mc_params()
            getattr(self, "_check_" + self.experiment.replace("-", "_"))()
        except ConfigError:
            raise
        except (QuasilabError, TypeError, ValueError, KeyError) as exc:
            raise ConfigError(str(exc)) from None

    def _need(self, *names):
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise ConfigError(f"{self.experiment} needs {missing}")

    def _positive(self, name):
        val = getattr(self, name)
        if val is not None and not (isinstance(val, (int, float)) and val > 0 and math.isfinite(val)):
            raise ConfigError(f"{name} must be a positive number")

    def _check_gamma_delta(self):
        self._need("gamma", "delta")
        if not self.gamma > self.delta > 0:
            raise ConfigError(
                f"gamma={self.gamma}, delta={self.delta}: the criterion needs gamma > delta > 0")

    def _check_freq_search(self):
        self._need("frequencies", "target")
        self._positive("target")
        if self.budget < 1:
            raise ConfigError("budget must be >= 1")
        self.alpha()

    def _check_interleave(self):
        self._need("frequencies", "epsilon")
        self._positive("epsilon")
        if len(self.frequencies) != 2:
            raise ConfigError("interleave needs exactly two frequencies")
        self.alpha()

    def _check_measure_zero(self):
        self._need("m", "epsilon")
        self._positive("epsilon")
        if not self.m or any(int(v) != v or v < 1 for v in self.m):
            raise ConfigError("m must be a list of positive integers")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if self.cutoff is not None and self.cutoff < 1:
            raise ConfigError("cutoff must be >= 1")

    def _check_measure_probe(self):
        self._need("probe", "potential")
        if self.probe not in PROBES:
            raise ConfigError(f"probe must be one of {PROBES}")
        f = self.potential_spec()
        need = {"f-set": ("y", "epsilon"), "e-set": ("M",), "kappa": ("epsilon", "eta"),
                "m-tau": ("tau",), "z-tau": ("tau", "frequencies")}[self.probe]
        self._need(*need)
        for name in ("epsilon", "eta"):
            self._positive(name)
        if self.probe == "z-tau":
            self._check_gamma_delta()
            if not self.delta < self.gamma / 2:
                raise ConfigError("the exceptional-set estimate needs delta < gamma / 2")
            if self.alpha().d != f.d:
                raise ConfigError("frequency count must match the potential dimension")
        if self.tau is not None and (len(self.tau) != f.d or min(self.tau) < 1):
            raise ConfigError("tau must have one positive entry per dimension")

    def _check_gordon_check(self):
        self._need("potential", "frequencies")
        if (self.tau is None) == (self.taus is None):
            raise ConfigError("give exactly one of tau or taus")
        self._check_gamma_delta()
        f = self.potential_spec()
        if self.alpha().d != f.d:
            raise ConfigError("frequency count must match the potential dimension")
        if self.lambda0 is None and not f.bounded:
            raise ConfigError("lambda0 is required for unbounded potentials")
        self._positive("lambda0")
        if self.rho_mode not in ("auto", "brute", "lipschitz"):
            raise ConfigError("rho_mode must be auto, brute or lipschitz")
        for t in self.tau_list():
            if len(t) != f.d or min(t) < 1:
                raise ConfigError("each tau must have one positive entry per dimension")
        self.phase_vector(f.d)

    def _check_box(self):
        self._need("sides")
        if not self.sides or min(self.sides) < 1:
            raise ConfigError("sides must be positive")
        if self.bc not in ("dirichlet", "periodic"):
            raise ConfigError("bc must be dirichlet or periodic")

    def _check_spectrum(self):
        self._need("potential", "frequencies")
        self._check_box()
        f = self.potential_spec()
        if f.d != len(self.sides) or self.alpha().d != f.d:
            raise ConfigError("potential, frequencies and sides must share one dimension")
        self.phase_vector(f.d)

    def _check_transport(self):
        self._need("times")
        self._check_box()
        if (self.potential is None) == (self.disorder is None):
            raise ConfigError("give exactly one of potential or disorder")
        if self.disorder is not None:
            bad = sorted(set(self.disorder) - {"strength", "seed"})
            if bad:
                raise ConfigError(f"unknown disorder keys: {bad}")
        else:
            self._need("frequencies")
            f = self.potential_spec()
            if f.d != len(self.sides) or self.alpha().d != f.d:
                raise ConfigError("potential, frequencies and sides must share one dimension")
            self.phase_vector(f.d)
        if any(t < 0 for t in self.times) or sorted(self.times) != list(self.times):
            raise ConfigError("times must be nondecreasing and nonnegative")
        if self.initial_site is not None:
            if len(self.initial_site) != len(self.sides) or any(
                    not 0 <= s < L for s, L in zip(self.initial_site, self.sides)):
                raise ConfigError("initial_site must lie inside the box")

    # -- builders -----------------------------------------------------------
    def mc_params(self, seed: int | None = None, threads: int | None = None) -> MCParams:
        kw: dict[str, Any] = dict(self.mc)
        if seed is not None:
            kw["seed"] = seed
        if threads is not None:
            kw["threads"] = threads
        return MCParams(**kw)

    def alpha(self) -> FrequencyVector:
        return FrequencyVector.from_config(self.frequencies)

    def potential_spec(self) -> PotentialSpec:
        return PotentialSpec.from_config(self.potential)

    def phase_vector(self, d: int) -> list[float]:
        phase = self.phase if self.phase is not None else [0.0] * d
        if len(phase) != d:
            raise ConfigError(f"phase must have {d} components")
        return [float(v) for v in phase]

    def tau_list(self) -> list[list[int]]:
        return [list(self.tau)] if self.tau is not None else [list(t) for t in self.taus]


def frequency_summary(f: Frequency) -> str:
    return f"{f.rule}[{f.precision_depth}]"
