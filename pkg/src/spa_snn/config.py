"""Run configuration: every tunable the simulator and trainer accept.

Defaults reproduce the small-scale digit-classification setup: a 100-neuron
two-layer network, 350 ms presentations at 0.5 ms resolution with Poisson
rate coding, Gaussian transmitter reception with mean drawn from [0.5, 1]
and adaptive variance starting at 0.25 above a 0.1 reception floor, and
trace STDP with a slowly decaying homeostatic threshold.

Config files are JSON holding any subset of the keys below; unknown keys are
rejected.  Command-line flags override file values.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path


class ConfigError(ValueError):
    """Config file or flag values are malformed or out of range."""


@dataclass
class RunConfig:
    # network
    neurons: int = 100            # excitatory population size
    dt_ms: float = 0.5
    sample_ms: float = 350.0      # presentation window per sample
    rest_ms: float = 150.0        # relaxation window between samples
    max_rate_hz: float = 63.75    # Poisson rate of a full-intensity pixel
    spa_enabled: bool = True
    seed: int = 0
    tau1_ms: float = 1.0          # excitatory transmitter decay
    tau2_ms: float = 2.0          # inhibitory transmitter decay
    tau_v_ms: float = 10.0        # membrane decay
    v_thr_mv: float = -52.0
    v0_mv: float = -65.0
    e_eq_mv: float = -80.0
    sigma0: float = 0.25          # initial reception standard deviation
    delta0: float = 0.1           # reception rate floor
    mu_min: float = 0.5           # per-cluster reception mean range
    mu_max: float = 1.0
    t_ref_ms: float = 5.0
    dv_a_max_mv: float = 3.0      # repolarization adjustment bound
    k_v_mv: float = 0.4           # mV per unit of gated conductance integral
    w_exc_inh: float = 22.5       # fixed one-to-one excitatory->inhibitory weight
    w_inh_exc: float = 17.0       # fixed lateral inhibition weight

    # learning
    a_plus: float = 0.01
    a_minus: float = 0.0001
    tau_trace_ms: float = 20.0
    theta_plus_mv: float = 0.05
    tau_theta_ms: float = 1e7
    norm_target: float = 78.0     # per-neuron incoming weight sum
    stdp_mode: str = "trace-soft-bound"

    # run orchestration
    dataset: str = "mnist"        # mnist | emnist-letters
    dataset_dir: str = ""
    samples: int = 10000          # training samples per pass
    passes: int = 1
    ckpt_every: int = 0           # 0 = final checkpoint only
    checkpoint: str = "checkpoint.spk"
    metrics_out: str = "metrics.csv"
    record_traces: bool = False
    label_samples: int = 10000    # samples used for neuron label assignment
    eval_samples: int = 0         # 0 = whole test split

    def validate(self) -> "RunConfig":
        if self.neurons < 1:
            raise ConfigError("neurons must be >= 1")
        for key in ("dt_ms", "sample_ms", "tau1_ms", "tau2_ms", "tau_v_ms",
                    "tau_trace_ms", "tau_theta_ms", "sigma0", "norm_target"):
            if getattr(self, key) <= 0:
                raise ConfigError(f"{key} must be positive")
        for key in ("rest_ms", "max_rate_hz", "t_ref_ms", "dv_a_max_mv", "k_v_mv",
                    "w_exc_inh", "w_inh_exc", "a_plus", "a_minus", "theta_plus_mv"):
            if getattr(self, key) < 0:
                raise ConfigError(f"{key} must be nonnegative")
        if not 0.0 < self.delta0 < 1.0:
            raise ConfigError("delta0 must lie in (0, 1)")
        if not 0.0 < self.mu_min <= self.mu_max <= 1.0:
            raise ConfigError("need 0 < mu_min <= mu_max <= 1")
        if self.stdp_mode not in ("trace-soft-bound", "post-only-exp"):
            raise ConfigError(f"unknown stdp_mode {self.stdp_mode!r}")
        if self.dataset not in ("mnist", "emnist-letters"):
            raise ConfigError(f"unknown dataset {self.dataset!r}")
        if self.samples < 0 or self.passes < 1:
            raise ConfigError("samples must be >= 0 and passes >= 1")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def field_names(cls) -> set:
        return {f.name for f in fields(cls)}

    @classmethod
    def from_dict(cls, values: dict) -> "RunConfig":
        unknown = set(values) - cls.field_names()
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**values)
        # json carries no int/float distinction; coerce the integer fields
        for key in ("neurons", "seed", "samples", "passes", "ckpt_every",
                    "label_samples", "eval_samples"):
            setattr(cfg, key, int(getattr(cfg, key)))
        return cfg.validate()

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            values = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(values, dict):
            raise ConfigError("config file must hold a JSON object")
        return cls.from_dict(values)
