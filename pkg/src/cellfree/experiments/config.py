"""Experiment configuration: defaults, JSON loading and validation."""

import json
import math
from dataclasses import asdict, dataclass, fields, replace

from ..geometry import PathLossModel
from ..signal import dbm_to_normalized_power

__all__ = ["ExperimentConfig", "ConfigError", "resolve_config", "SCHEMA"]


class ConfigError(ValueError):
    """Unparseable file or a configuration violating an invariant."""


@dataclass(frozen=True)
class ExperimentConfig:
    # physical layer
    tx_power_dbm: float = 23.0
    bandwidth_hz: float = 20e6
    noise_psd_dbm_hz: float = -169.0
    carrier_freq_mhz: float = 1900.0
    ap_height_m: float = 7.0
    device_height_m: float = 1.65
    # geometry (km, points/km^2)
    lambda_a: float = 2.0
    lambda_d: float = 637.0
    r0_km: float = 2.0
    r1_km: float = 1.0
    # device density used where full AMP runs per trial
    sim_lambda_d: float = 16.0
    # protocol
    tau: int = 100
    epsilon: float = 0.05
    n_antennas: int = 3
    amp_iterations: int = 10
    # analysis
    p0: float = 0.02
    weight_strategy: str = "equal"
    grid_resolution: int = 10
    se_form: str = "decoupled"
    omega_form: str = "moment"
    # trial counts
    trials: int = 1000
    realizations: int = 200
    devices_per_realization: int = 50
    seed: int = 0

    @property
    def rho(self):
        """Transmit power over the noise floor (linear)."""
        return float(dbm_to_normalized_power(self.tx_power_dbm, self.bandwidth_hz,
                                             self.noise_psd_dbm_hz))

    @property
    def E(self):
        """Pilot energy ``tau * rho``."""
        return self.tau * self.rho

    @property
    def path_loss(self):
        return PathLossModel(self.carrier_freq_mhz, self.ap_height_m, self.device_height_m)

    def problems(self):
        out = []
        positive = ["bandwidth_hz", "carrier_freq_mhz", "ap_height_m", "device_height_m",
                    "r0_km", "r1_km", "sim_lambda_d", "tau", "n_antennas", "amp_iterations",
                    "grid_resolution", "trials", "realizations", "devices_per_realization"]
        for name in positive:
            if not getattr(self, name) > 0:
                out.append(f"{name} must be positive")
        for name in ("lambda_a", "lambda_d"):
            if not getattr(self, name) >= 0:
                out.append(f"{name} must be non-negative")
        if not 0.0 <= self.epsilon <= 1.0:
            out.append("epsilon must lie in [0, 1]")
        if not 0.0 <= self.p0 <= 1.0:
            out.append("p0 must lie in [0, 1]")
        if self.r1_km > self.r0_km:
            out.append("r1_km must not exceed r0_km")
        if self.weight_strategy not in ("equal", "smallcell", "optimal"):
            out.append("weight_strategy must be equal, smallcell or optimal")
        if self.se_form not in ("decoupled", "mse"):
            out.append("se_form must be decoupled or mse")
        if self.omega_form not in ("moment", "literal"):
            out.append("omega_form must be moment or literal")
        if not math.isfinite(self.tx_power_dbm) or not math.isfinite(self.noise_psd_dbm_hz):
            out.append("power levels must be finite")
        return out

    def to_dict(self):
        d = asdict(self)
        d["rho"] = self.rho
        d["E"] = self.E
        return d


SCHEMA = {f.name: f.type if isinstance(f.type, str) else f.type.__name__ for f in fields(ExperimentConfig)}

_TYPES = {"float": float, "int": int, "str": str}


def _coerce(name, value):
    kind = _TYPES[SCHEMA[name]]
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if kind is str and isinstance(value, str):
        return value
    if isinstance(value, str):
        try:
            return kind(value)
        except ValueError:
            pass
    raise ConfigError(f"{name}: expected {SCHEMA[name]}, got {value!r}")


def resolve_config(file_path=None, overrides=None):
    """Defaults, then the JSON file (if any), then ``overrides``.

    Raises :class:`ConfigError` on parse errors (with line/column), unknown
    keys or invariant violations (all listed).
    """
    values = {}
    if file_path is not None:
        with open(file_path, encoding="utf-8") as fh:
            text = fh.read()
        if text.strip():
            try:
                data = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{file_path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
            if not isinstance(data, dict):
                raise ConfigError(f"{file_path}: top level must be an object")
            values.update(data)
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = sorted(set(values) - set(SCHEMA))
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
    cfg = replace(ExperimentConfig(), **{k: _coerce(k, v) for k, v in values.items()})
    bad = cfg.problems()
    if bad:
        raise ConfigError("; ".join(bad))
    return cfg
