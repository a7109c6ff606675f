"""JSON run configuration: system, reference equilibrium and numerical policy.

Schema::

    {
      "sample": {"h_re": [[...]], "h_im": [[...]]},
      "leads": [{"chi_re": [...], "chi_im": [...]}, ...],
      "reservoirs": [{"beta": 2.0 | "inf", "mu": 0.0}, ...],
      "equilibrium": {"beta": 2.0, "mu": 0.0},
      "numerics": {...}
    }

``h_im``, ``chi_im``, ``mu``, ``equilibrium`` and ``numerics`` are optional;
unknown keys are rejected at every level.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, InvalidInput
from .model import EquilibriumRef, SystemSpec, build_system


@dataclass(frozen=True)
class Numerics:
    """Numerical policy shared by the CLI commands."""

    abs_tol: float = 1e-10
    fcs_tol: float = 1e-9
    R: int = 400
    window: tuple = (0.3, 0.6)
    time_samples: int = 301
    wavepacket_R: int = 1000
    wavepacket_energies: tuple = (0.0, 0.3)
    oracle_R: int = 4

    def __post_init__(self):
        object.__setattr__(self, "window", tuple(float(w) for w in self.window))
        object.__setattr__(self, "wavepacket_energies", tuple(float(e) for e in self.wavepacket_energies))
        if not self.abs_tol > 0 or not self.fcs_tol > 0:
            raise ConfigError("tolerances must be positive")
        if int(self.R) < 2 or int(self.oracle_R) < 2 or int(self.wavepacket_R) < 2:
            raise ConfigError("lead lengths must be at least 2")
        if len(self.window) != 2 or not 0 <= self.window[0] < self.window[1]:
            raise ConfigError("window must be [start, stop] with 0 <= start < stop (units of R)")
        if int(self.time_samples) < 1:
            raise ConfigError("time_samples must be positive")


@dataclass(frozen=True, eq=False)
class RunConfig:
    spec: SystemSpec
    eq: EquilibriumRef
    numerics: Numerics

    def __eq__(self, other):
        return isinstance(other, RunConfig) and to_dict(self) == to_dict(other)


def _check_keys(obj, allowed, where, required=()):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be an object")
    extra = set(obj) - set(allowed)
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(extra)}")
    missing = [k for k in required if k not in obj]
    if missing:
        raise ConfigError(f"missing key(s) in {where}: {missing}")


def _real_array(x, where):
    try:
        a = np.asarray(x, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where} must be numeric") from exc
    if not np.all(np.isfinite(a)):
        raise ConfigError(f"{where} must be finite")
    return a


def _beta(x, where):
    if x == "inf":
        return math.inf
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"{where} must be a number or \"inf\"")
    return float(x)


def from_dict(data) -> RunConfig:
    _check_keys(data, ("sample", "leads", "reservoirs", "equilibrium", "numerics"),
                "config", required=("sample", "leads", "reservoirs"))
    s = data["sample"]
    _check_keys(s, ("h_re", "h_im"), "sample", required=("h_re",))
    h = _real_array(s["h_re"], "sample.h_re").astype(complex)
    if "h_im" in s:
        him = _real_array(s["h_im"], "sample.h_im")
        if him.shape != h.shape:
            raise ConfigError("sample.h_im must match sample.h_re in shape")
        h = h + 1j * him
    if not isinstance(data["leads"], list) or not isinstance(data["reservoirs"], list):
        raise ConfigError("leads and reservoirs must be lists")
    chis = []
    for k, lead in enumerate(data["leads"]):
        _check_keys(lead, ("chi_re", "chi_im"), f"leads[{k}]", required=("chi_re",))
        chi = _real_array(lead["chi_re"], f"leads[{k}].chi_re").astype(complex)
        if "chi_im" in lead:
            cim = _real_array(lead["chi_im"], f"leads[{k}].chi_im")
            if cim.shape != chi.shape:
                raise ConfigError(f"leads[{k}].chi_im must match chi_re in shape")
            chi = chi + 1j * cim
        chis.append(chi)
    reservoirs = []
    for k, res in enumerate(data["reservoirs"]):
        _check_keys(res, ("beta", "mu"), f"reservoirs[{k}]", required=("beta",))
        mu = float(_real_array(res.get("mu", 0.0), f"reservoirs[{k}].mu"))
        reservoirs.append((_beta(res["beta"], f"reservoirs[{k}].beta"), mu))
    eq_data = data.get("equilibrium", {"beta": 1.0, "mu": 0.0})
    _check_keys(eq_data, ("beta", "mu"), "equilibrium", required=("beta",))
    num_data = data.get("numerics", {})
    _check_keys(num_data, [f.name for f in fields(Numerics)], "numerics")
    try:
        spec = build_system(h, chis, reservoirs)
        eq = EquilibriumRef(_beta(eq_data["beta"], "equilibrium.beta"), float(eq_data.get("mu", 0.0)))
        numerics = Numerics(**num_data)
    except InvalidInput:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(spec, eq, numerics)


def _beta_out(b):
    return "inf" if math.isinf(b) else b


def to_dict(cfg: RunConfig) -> dict:
    spec = cfg.spec
    num = asdict(cfg.numerics)
    num["window"] = list(num["window"])
    num["wavepacket_energies"] = list(num["wavepacket_energies"])
    return {
        "sample": {"h_re": spec.h_s.real.tolist(), "h_im": spec.h_s.imag.tolist()},
        "leads": [{"chi_re": c.real.tolist(), "chi_im": c.imag.tolist()} for c in spec.chis],
        "reservoirs": [{"beta": _beta_out(r.beta), "mu": r.mu} for r in spec.reservoirs],
        "equilibrium": {"beta": cfg.eq.beta_bar, "mu": cfg.eq.mu_bar},
        "numerics": num,
    }


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return from_dict(data)


def dump_config(cfg: RunConfig, path=None) -> str:
    text = json.dumps(to_dict(cfg), indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def with_numerics(cfg: RunConfig, **changes) -> RunConfig:
    return RunConfig(cfg.spec, cfg.eq, replace(cfg.numerics, **changes))
