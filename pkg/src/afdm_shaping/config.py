"""Typed INI run configuration with shipped defaults.

The defaults live in ``data/defaults.ini``.  A user file overrides individual
keys; unknown sections or keys are rejected.
"""

from __future__ import annotations

import configparser
import io
from importlib import resources

import numpy as np

from .core import AfdmConfig
from .metrics import LazSpec
from .optimizer import MODES, OptimizerOptions


class ConfigError(ValueError):
    """Invalid configuration (maps to exit code 1)."""


def parse_grid(text):
    """``"a:step:b"`` (inclusive stop) or a comma list, as a float array."""
    text = str(text).strip()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[1] == 0:
            raise ValueError(f"bad grid {text!r}; expected start:step:stop")
        a, step, b = parts
        n = int(np.floor((b - a) / step + 1e-9)) + 1
        if n < 1:
            raise ValueError(f"empty grid {text!r}")
        return np.round(a + step * np.arange(n), 12)
    return np.array([float(p) for p in text.split(",") if p.strip()])


def parse_list(text):
    return [p.strip() for p in str(text).split(",") if p.strip()]


def parse_optional_float(text):
    t = str(text).strip().lower()
    return None if t in ("none", "ideal", "") else float(t)


SCHEMA = {
    "system": {
        "n_subcarriers": int, "c1_numerator": int, "prechirp_size": int, "oversampling": int,
        "psk_order": int, "reserved_ratio": float, "placement": str, "placement_seed": int, "carrier_frequency_hz": float,
        "bandwidth_hz": float,
    },
    "laz": {"tau_max": int, "mu_min": float, "mu_max": float, "n_mu": int, "weight": float},
    "optimizer": {
        "mode": str, "variable_set": str, "gamma_db": float, "ell": int, "max_iter": int,
        "nsp_start": int, "stop_tol": float, "step": str, "acceleration": str, "isl_bound": str,
        "moment_budget": str,
    },
    "design": {"baseline": str, "seeds": int},
    "ccdf": {"source": str, "trials": int, "thresholds_db": parse_grid},
    "sense": {
        "sources": parse_list, "snr_db": parse_grid, "trials": int, "pfa": float, "guard": int,
        "train": int, "gap_db": float, "strong_delay": int, "strong_doppler": int,
        "weak_delay": int, "weak_doppler": int, "roc_snr_db": float, "n_waveforms": int,
    },
    "ber": {
        "sources": parse_list, "snr_db": parse_grid, "ibo_db": parse_optional_float,
        "smoothness": float, "channel": str, "min_bits": int, "n_waveforms": int,
        "profile_db": parse_grid, "cp_len": int, "max_doppler": float,
    },
}


def defaults_text():
    return resources.files("afdm_shaping").joinpath("data/defaults.ini").read_text()


class RunConfig:
    """Parsed configuration: ``cfg[section][key]`` gives the typed value.

    Attributes
    ----------
    text : str
        Canonical text of the merged configuration (hashed into manifests).
    """

    def __init__(self, values, raw):
        self.values = values
        self._raw = raw

    @classmethod
    def load(cls, path=None, overrides=None):
        """Merge defaults, an optional user file and ``{(section, key): text}`` overrides."""
        parser = configparser.ConfigParser(interpolation=None)
        parser.read_string(defaults_text())
        if path is not None:
            user = configparser.ConfigParser(interpolation=None)
            try:
                with open(path) as fh:
                    user.read_file(fh)
            except OSError as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
            except configparser.Error as exc:
                raise ConfigError(f"malformed config {path}: {exc}") from exc
            for section in user.sections():
                if section not in SCHEMA:
                    raise ConfigError(f"unknown section [{section}]")
                for key, val in user[section].items():
                    if key not in SCHEMA[section]:
                        raise ConfigError(f"unknown key {key!r} in [{section}]")
                    parser[section][key] = val
        for (section, key), val in (overrides or {}).items():
            if val is None:
                continue
            if section not in SCHEMA or key not in SCHEMA[section]:
                raise ConfigError(f"unknown setting {section}.{key}")
            parser[section][key] = str(val)
        values = {}
        for section, keys in SCHEMA.items():
            values[section] = {}
            for key, kind in keys.items():
                text = parser[section][key]
                try:
                    values[section][key] = kind(text)
                except ValueError as exc:
                    raise ConfigError(f"{section}.{key} = {text!r}: {exc}") from exc
        cfg = cls(values, parser)
        cfg.validate()
        return cfg

    def __getitem__(self, section):
        return self.values[section]

    @property
    def text(self):
        buf = io.StringIO()
        self._raw.write(buf)
        return buf.getvalue()

    def validate(self):
        try:
            self.afdm()
            self.laz()
            self.optimizer_options()
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        if self["design"]["baseline"] not in ("none", "conventional", "gps"):
            raise ConfigError("design.baseline must be none, conventional or gps")
        if self["design"]["seeds"] < 1:
            raise ConfigError("design.seeds must be >= 1")
        if self["ber"]["channel"] not in ("awgn", "random", "fixed"):
            raise ConfigError("ber.channel must be awgn, random or fixed")
        for section in ("sense", "ber"):
            for src in self[section]["sources"]:
                parse_source(src, self)
        parse_source(self["ccdf"]["source"], self)

    def afdm(self, reserved_ratio=None):
        s = self["system"]
        n = s["n_subcarriers"]
        ratio = s["reserved_ratio"] if reserved_ratio is None else reserved_ratio
        return AfdmConfig.create(n, ratio, placement=s["placement"], placement_seed=s["placement_seed"],
                                 c1=s["c1_numerator"] / (2 * n),
                                 prechirp_size=s["prechirp_size"], oversampling=s["oversampling"])

    def laz(self):
        z = self["laz"]
        weights = None
        if z["weight"] != 1.0:
            weights = np.full((2 * z["tau_max"] + 1, z["n_mu"]), z["weight"])
        return LazSpec(z["tau_max"], z["mu_min"], z["mu_max"], z["n_mu"], weights)

    def optimizer_options(self, **changes):
        o = dict(self["optimizer"])
        acc = o.pop("acceleration")
        o["acceleration"] = {"auto": "auto", "true": True, "on": True, "false": False, "off": False}.get(
            acc.lower(), acc)
        o.update(changes)
        return OptimizerOptions(**o)


_MODE_ALIASES = {"af-shape": "af_shape", "papr-min": "papr_min"}
_VARS_ALIASES = {"rcs": "rcs_only", "rcs-only": "rcs_only", "rcs+c2": "rcs_plus_prechirp",
                 "rcs-plus-prechirp": "rcs_plus_prechirp"}


def normalize_mode(text):
    return _MODE_ALIASES.get(text, text)


def normalize_vars(text):
    return _VARS_ALIASES.get(text, text)


def parse_source(text, run_cfg):
    """Decode ``kind[:vars[:ratio[:gamma]]]`` into a source description.

    ``kind`` is ``conventional``, ``gps`` or an optimizer mode.  Omitted fields
    fall back to the ``[optimizer]`` and ``[system]`` sections, except that a
    joint source without a positive target uses 4 dB.  Baselines always use
    every subcarrier for data.
    """
    parts = [p.strip() for p in text.split(":")]
    kind = normalize_mode(parts[0])
    if kind in ("conventional", "gps"):
        if len(parts) > 1:
            raise ConfigError(f"source {text!r}: baselines take no options")
        return {"kind": kind, "ratio": 0.0, "label": kind}
    if kind not in MODES:
        raise ConfigError(f"unknown waveform source {text!r}")
    opt = run_cfg["optimizer"]
    try:
        vs = normalize_vars(parts[1]) if len(parts) > 1 and parts[1] else opt["variable_set"]
        ratio = float(parts[2]) if len(parts) > 2 else run_cfg["system"]["reserved_ratio"]
        gamma = float(parts[3]) if len(parts) > 3 else opt["gamma_db"]
    except ValueError as exc:
        raise ConfigError(f"source {text!r}: {exc}") from exc
    if kind == "joint" and gamma <= 0:
        gamma = 4.0
    if not 0 <= ratio < 1:
        raise ConfigError(f"source {text!r}: reserved ratio must lie in [0, 1)")
    label = "_".join(p for p in [kind, vs, f"{ratio:g}"] + ([f"g{gamma:g}"] if kind == "joint" else []))
    return {"kind": kind, "variable_set": vs, "ratio": ratio, "gamma_db": gamma, "label": label}
