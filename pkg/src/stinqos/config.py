"""Run-configuration parsing and validation for the batch CLI.

One JSON file describes one run: the command, the RNG seed, the link
scenario, and command-specific parameters. Unknown keys are rejected with a
nearest-key hint; every value that falls back to a default is recorded so
the CSV comment header can echo the fully resolved configuration.
"""
from __future__ import annotations

import difflib
import json
from dataclasses import dataclass, field

from .aoi import ArrivalModel, ServiceModel
from .channel import InterfererField, LinkBudget, Scenario, ShadowedRicianParams
from .errors import ConfigError, StinQosError
from .experiments import SweepSpec, default_scenario

COMMANDS = ("error", "exponent", "aoi-sim", "paoi-bound", "delay-bound", "sweep")

_TOP_KEYS = {"command", "seed", "output", "scenario", "coding", "error_model", "params"}
_SCENARIO_PRESET_KEYS = {"k", "avg_snr_db", "inr_db", "rx_antennas"}
_SCENARIO_FULL_KEYS = {"satellite", "fading", "interferers", "rx_antennas"}
_SATELLITE_KEYS = {"carrier_hz", "distance_m", "gain_tx_dbi", "gain_rx_dbi", "tx_snr_db"}
_FADING_KEYS = {"b", "m", "omega"}
_INTERFERER_KEYS = {
    "count", "r_inner_m", "r_outer_m", "carrier_hz",
    "gain_tx_dbi", "gain_rx_dbi", "tx_snr_db",
}
_CODING_KEYS = {"blocklength", "code_size", "rate"}
_ERROR_MODEL_KEYS = {"method", "sample_budget", "quad_tolerance"}
_ARRIVAL_KEYS = {"kind", "period", "rate"}
_SERVICE_KEYS = {"kind", "n", "epsilon"}

_PARAM_KEYS = {
    "error": set(),
    "exponent": set(),
    "aoi-sim": {"n_updates", "arrival", "service"},
    "paoi-bound": {"a_th_cu", "u", "theta", "arrival", "service"},
    "delay-bound": {"d_th_blocks", "arrival_kind", "alpha_bits",
                    "rate_per_block", "batch_bits"},
    "sweep": {f.name for f in SweepSpec.__dataclass_fields__.values()},
}


@dataclass
class RunConfig:
    """Fully validated run description."""

    command: str
    seed: int
    output: str
    scenario: Scenario
    coding: "object"
    error_model: "object"
    params: dict
    defaults_used: list = field(default_factory=list)
    raw: dict = field(default_factory=dict)


def _check_keys(block: dict, allowed: set, context: str) -> None:
    for key in block:
        if key not in allowed:
            hint = difflib.get_close_matches(key, sorted(allowed), n=1, cutoff=0.4)
            suffix = f"; nearest known key: {hint[0]!r}" if hint else ""
            raise ConfigError(f"unknown key {key!r} in {context}{suffix}")


def _require(block: dict, key: str, context: str):
    if key not in block:
        raise ConfigError(f"missing required key {key!r} in {context}")
    return block[key]


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON run configuration."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config is not valid JSON: {exc.msg} at line {exc.lineno} column {exc.colno}"
        ) from None
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    return build_config(raw)


def build_config(raw: dict) -> RunConfig:
    """Validate an already-deserialized configuration mapping."""
    _check_keys(raw, _TOP_KEYS, "config")
    command = _require(raw, "command", "config")
    if command not in COMMANDS:
        hint = difflib.get_close_matches(str(command), COMMANDS, n=1)
        suffix = f"; nearest known command: {hint[0]!r}" if hint else ""
        raise ConfigError(f"unknown command {command!r}{suffix}")
    seed = _require(raw, "seed", "config")
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2 ** 64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed!r}")

    defaults_used: list = []
    output = raw.get("output")
    if output is None:
        output = f"{command.replace('-', '_')}.csv"
        defaults_used.append(f"output={output}")
    if not isinstance(output, str) or not output:
        raise ConfigError(f"output must be a nonempty path string, got {output!r}")

    try:
        scenario = _build_scenario(raw.get("scenario"), seed, defaults_used)
        coding = _build_coding(raw.get("coding"), defaults_used)
        error_model = _build_error_model(raw.get("error_model"), defaults_used)
    except ConfigError:
        raise
    except (StinQosError, TypeError) as exc:
        raise ConfigError(str(exc)) from None

    params = raw.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("params must be a JSON object")
    _check_keys(params, _PARAM_KEYS[command], f"params of command {command!r}")
    if command == "sweep" and "figure" not in params:
        raise ConfigError("sweep command requires params.figure")

    return RunConfig(
        command=command,
        seed=seed,
        output=output,
        scenario=scenario,
        coding=coding,
        error_model=error_model,
        params=params,
        defaults_used=defaults_used,
        raw=raw,
    )


def _build_scenario(block, seed: int, defaults_used: list) -> Scenario:
    if block is None:
        defaults_used.append("scenario=default(k=1, avg_snr_db=15, inr_db=-3)")
        return default_scenario(k=1, avg_snr_db=15.0, inr_db=-3.0, seed=seed)
    if not isinstance(block, dict):
        raise ConfigError("scenario must be a JSON object")
    if "satellite" in block or "fading" in block or "interferers" in block:
        _check_keys(block, _SCENARIO_FULL_KEYS, "scenario")
        sat = _require(block, "satellite", "scenario")
        _check_keys(sat, _SATELLITE_KEYS, "scenario.satellite")
        fad = _require(block, "fading", "scenario")
        _check_keys(fad, _FADING_KEYS, "scenario.fading")
        intf = _require(block, "interferers", "scenario")
        _check_keys(intf, _INTERFERER_KEYS, "scenario.interferers")
        return Scenario(
            satellite=LinkBudget(**sat),
            fading=ShadowedRicianParams(**fad),
            interferers=InterfererField(**intf),
            rx_antennas=block.get("rx_antennas", 1),
            seed=seed,
        )
    _check_keys(block, _SCENARIO_PRESET_KEYS, "scenario")
    return default_scenario(
        k=block.get("k", 1),
        avg_snr_db=block.get("avg_snr_db", 15.0),
        inr_db=block.get("inr_db", -3.0),
        rx_antennas=block.get("rx_antennas", 2),
        seed=seed,
    )


def _build_coding(block, defaults_used: list):
    from .fbc import CodingSpec

    if block is None:
        defaults_used.append("coding=(blocklength=64, code_size=2^32)")
        return CodingSpec(blocklength=64, code_size=2 ** 32)
    if not isinstance(block, dict):
        raise ConfigError("coding must be a JSON object")
    _check_keys(block, _CODING_KEYS, "coding")
    return CodingSpec(
        blocklength=_require(block, "blocklength", "coding"),
        code_size=_require(block, "code_size", "coding"),
        rate=block.get("rate"),
    )


def _build_error_model(block, defaults_used: list):
    from .fbc import ErrorModel

    if block is None:
        defaults_used.append("error_model=(quadrature, tol=1e-06)")
        return ErrorModel()
    if not isinstance(block, dict):
        raise ConfigError("error_model must be a JSON object")
    _check_keys(block, _ERROR_MODEL_KEYS, "error_model")
    return ErrorModel(
        method=block.get("method", "quadrature"),
        sample_budget=block.get("sample_budget", 100_000),
        quad_tolerance=block.get("quad_tolerance", 1e-6),
    )


def build_arrival(block, defaults_used: list, default_gap_cu: float = 4096.0) -> ArrivalModel:
    if block is None:
        defaults_used.append(f"arrival=poisson(rate=1/{default_gap_cu:g} per cu)")
        return ArrivalModel.poisson(1.0 / default_gap_cu)
    _check_keys(block, _ARRIVAL_KEYS, "arrival")
    kind = _require(block, "kind", "arrival")
    if kind == "deterministic":
        return ArrivalModel.deterministic(_require(block, "period", "arrival"))
    if kind == "poisson":
        return ArrivalModel.poisson(_require(block, "rate", "arrival"))
    raise ConfigError(f"unknown arrival kind {kind!r}; expected deterministic|poisson")


def build_service(
    block, defaults_used: list, rc: RunConfig
) -> ServiceModel:
    """Service model; ARQ epsilon defaults to the scenario's average error."""
    from .fbc import average_error

    if block is None:
        block = {}
        defaults_used.append("service=arq(n=coding.blocklength, epsilon=from scenario)")
    _check_keys(block, _SERVICE_KEYS, "service")
    kind = block.get("kind", "arq")
    n = block.get("n", rc.coding.blocklength)
    if kind == "fixed":
        return ServiceModel.fixed(n)
    if kind != "arq":
        raise ConfigError(f"unknown service kind {kind!r}; expected fixed|arq")
    epsilon = block.get("epsilon")
    if epsilon is None:
        epsilon = average_error(rc.scenario, rc.coding, rc.error_model).value
        defaults_used.append(f"service.epsilon={epsilon!r} (scenario average error)")
    return ServiceModel.arq(n, epsilon)


def apply_overrides(raw: dict, overrides: list) -> dict:
    """Apply KEY=VALUE scalar overrides with dotted paths to the raw config."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not KEY=VALUE")
        path, _, value_text = item.partition("=")
        try:
            value = json.loads(value_text)
        except json.JSONDecodeError:
            value = value_text  # bare strings stay strings
        if isinstance(value, (dict, list)):
            raise ConfigError(f"override {path!r} must be scalar, got {value_text!r}")
        node = raw
        parts = path.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override path {path!r} crosses a scalar")
        node[parts[-1]] = value
    return raw


def echo_params(rc: RunConfig) -> dict:
    """Flattened effective configuration for the CSV comment header."""
    flat = {
        "command": rc.command,
        "seed": rc.seed,
        "output": rc.output,
        "coding.blocklength": rc.coding.blocklength,
        "coding.code_size": rc.coding.code_size,
        "coding.rate_nats": rc.coding.rate,
        "error_model.method": rc.error_model.method,
        "error_model.sample_budget": rc.error_model.sample_budget,
        "error_model.quad_tolerance": rc.error_model.quad_tolerance,
        "scenario.rx_antennas": rc.scenario.rx_antennas,
        "scenario.satellite.carrier_hz": rc.scenario.satellite.carrier_hz,
        "scenario.satellite.distance_m": rc.scenario.satellite.distance_m,
        "scenario.satellite.gain_tx_dbi": rc.scenario.satellite.gain_tx_dbi,
        "scenario.satellite.gain_rx_dbi": rc.scenario.satellite.gain_rx_dbi,
        "scenario.satellite.tx_snr_db": rc.scenario.satellite.tx_snr_db,
        "scenario.fading.b": rc.scenario.fading.b,
        "scenario.fading.m": rc.scenario.fading.m,
        "scenario.fading.omega": rc.scenario.fading.omega,
        "scenario.interferers.count": rc.scenario.interferers.count,
        "scenario.interferers.r_inner_m": rc.scenario.interferers.r_inner_m,
        "scenario.interferers.r_outer_m": rc.scenario.interferers.r_outer_m,
        "scenario.interferers.tx_snr_db": rc.scenario.interferers.tx_snr_db,
    }
    for i, note in enumerate(rc.defaults_used):
        flat[f"default.{i}"] = note
    for key, value in sorted(rc.params.items()):
        if isinstance(value, dict):
            for k2, v2 in sorted(value.items()):
                flat[f"params.{key}.{k2}"] = v2
        else:
            flat[f"params.{key}"] = value
    return flat
