"""Run configuration and manifests.

A run is described by one TOML file (JSON accepted as an alternative) with
sections [federation], [dataset], [partition], [diagnostics], [output].
Unknown keys anywhere are rejected, every value is type- and range-checked
before any compute starts, and the fully-defaulted config canonicalizes to
sorted JSON whose SHA-256 prefix names the run directory.  The manifest
written into each run directory echoes the whole config, so a manifest file
is itself an accepted config input and any run can be regenerated from it.
"""

import hashlib
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from .federation import FederationConfig
from .linalg import derive_seed


class ConfigError(Exception):
    """Invalid, unparsable, or unknown configuration content."""


# key -> (python type, default); None default means required when relevant.
_FEDERATION_KEYS = {
    "n_clients": (int, 8),
    "tau": (int, 5),
    "eta": (float, 0.05),
    "rounds": (int, 400),
    "batch_size": (int, 64),
    "local_epochs": (int, 1),
    "seed": (int, 0),
    "epsilon": (float, 0.5),
    "mode": (str, "federated"),
    "hidden": (list, [64, 32]),
    "embed_dim": (int, 10),
    "eval_cap": (int, 512),
    "weighted_averaging": (bool, False),
}
_DATASET_COMMON = {"kind": (str, "synthetic")}
_DATASET_SYNTHETIC = {
    "n_classes": (int, 4),
    "subspace_dim": (int, 2),
    "samples_per_class": (int, 200),
    "ambient_dim": (int, 20),
    "noise_sigma": (float, 0.05),
}
_DATASET_CSV = {"path": (str, None)}
_PARTITION_KEYS = {"alpha": (float, 5.0), "min_per_client": (int, 2)}
_DIAGNOSTICS_KEYS = {"subsample_cap": (int, 2000)}
_OUTPUT_KEYS = {"directory": (str, "runs")}


@dataclass(frozen=True)
class RunConfig:
    federation: FederationConfig
    dataset: dict
    partition: dict
    diagnostics: dict
    output_directory: str
    canonical: dict     # fully-defaulted echo used for hashing and manifests

    @property
    def root_seed(self):
        return self.federation.seed


def _coerce(section, key, value, want):
    where = f"{section}.{key}"
    if want is bool:
        if type(value) is not bool:
            raise ConfigError(f"{where}: expected a boolean, got {value!r}")
        return value
    if want is int:
        if type(value) is not int:
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if want is float:
        if type(value) is bool or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if want is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    if want is list:
        if not isinstance(value, list) or any(type(v) is not int for v in value):
            raise ConfigError(f"{where}: expected a list of integers, got {value!r}")
        return list(value)
    raise AssertionError(f"unhandled schema type {want}")


def _apply_schema(section, given, schema):
    out = {}
    for key, value in given.items():
        if key not in schema:
            raise ConfigError(f"unknown key {section}.{key}")
        out[key] = _coerce(section, key, value, schema[key][0])
    for key, (_, default) in schema.items():
        if key not in out:
            if default is None:
                raise ConfigError(f"missing required key {section}.{key}")
            out[key] = default
    return out


def _validate_tree(data):
    if not isinstance(data, dict):
        raise ConfigError("config root must be a table of sections")
    known = {"federation", "dataset", "partition", "diagnostics", "output"}
    for section in data:
        if section not in known:
            raise ConfigError(f"unknown section [{section}]")
        if not isinstance(data[section], dict):
            raise ConfigError(f"section [{section}] must be a table")

    federation = _apply_schema(
        "federation", data.get("federation", {}), _FEDERATION_KEYS
    )
    raw_dataset = data.get("dataset", {})
    kind = raw_dataset.get("kind", "synthetic")
    if kind == "synthetic":
        schema = {**_DATASET_COMMON, **_DATASET_SYNTHETIC}
    elif kind == "csv":
        schema = {**_DATASET_COMMON, **_DATASET_CSV}
    else:
        raise ConfigError(f"dataset.kind must be 'synthetic' or 'csv', got {kind!r}")
    dataset = _apply_schema("dataset", raw_dataset, schema)
    partition = _apply_schema("partition", data.get("partition", {}), _PARTITION_KEYS)
    diagnostics = _apply_schema(
        "diagnostics", data.get("diagnostics", {}), _DIAGNOSTICS_KEYS
    )
    output = _apply_schema("output", data.get("output", {}), _OUTPUT_KEYS)

    fed = FederationConfig(
        n_clients=federation["n_clients"],
        tau=federation["tau"],
        eta=federation["eta"],
        rounds=federation["rounds"],
        batch_size=federation["batch_size"],
        local_epochs=federation["local_epochs"],
        seed=federation["seed"],
        epsilon=federation["epsilon"],
        mode=federation["mode"],
        hidden=tuple(federation["hidden"]),
        embed_dim=federation["embed_dim"],
        eval_cap=federation["eval_cap"],
        weighted_averaging=federation["weighted_averaging"],
    )
    try:
        fed.validate()
    except ValueError as exc:
        raise ConfigError(f"federation: {exc}") from exc
    if fed.eval_cap < 1:
        raise ConfigError("federation.eval_cap must be >= 1")
    if kind == "synthetic":
        for key in ("n_classes", "subspace_dim", "samples_per_class", "ambient_dim"):
            if dataset[key] < 1:
                raise ConfigError(f"dataset.{key} must be >= 1")
        if dataset["noise_sigma"] < 0:
            raise ConfigError("dataset.noise_sigma must be >= 0")
    if not partition["alpha"] > 0:
        raise ConfigError("partition.alpha must be positive")
    if partition["min_per_client"] < 0:
        raise ConfigError("partition.min_per_client must be >= 0")
    if diagnostics["subsample_cap"] < 1:
        raise ConfigError("diagnostics.subsample_cap must be >= 1")

    canonical = {
        "federation": federation,
        "dataset": dataset,
        "partition": partition,
        "diagnostics": diagnostics,
        "output": output,
    }
    return RunConfig(
        federation=fed,
        dataset=dataset,
        partition=partition,
        diagnostics=diagnostics,
        output_directory=output["directory"],
        canonical=canonical,
    )


def parse_config_text(text, fmt="toml"):
    if fmt == "toml":
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"TOML parse error: {exc}") from exc
    elif fmt == "json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"JSON parse error: {exc}") from exc
    else:
        raise ConfigError(f"unknown config format {fmt!r}")
    # A manifest file embeds the config it ran with; accept it directly.
    if isinstance(data, dict) and "config" in data and "config_hash" in data:
        data = data["config"]
    return _validate_tree(data)


def parse_config(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    fmt = "json" if path.suffix.lower() == ".json" else "toml"
    return parse_config_text(text, fmt)


def serialize_config(config):
    """Canonical JSON text; parse(serialize(parse(x))) == parse(x)."""
    return json.dumps(config.canonical, sort_keys=True, indent=2) + "\n"


def config_hash(config):
    blob = json.dumps(config.canonical, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def make_run_dir(config, now=None):
    """Create a fresh run directory named by timestamp and config hash."""
    stamp = (now or datetime.now(timezone.utc)).strftime("%Y%m%d-%H%M%S")
    root = Path(config.output_directory)
    root.mkdir(parents=True, exist_ok=True)
    base = f"{stamp}-{config_hash(config)}"
    candidate = root / base
    suffix = 0
    while candidate.exists():
        suffix += 1
        candidate = root / f"{base}-{suffix}"
    candidate.mkdir()
    return candidate


def _utc_now():
    return datetime.now(timezone.utc).isoformat()


def start_manifest(run_dir, config, version):
    root = config.root_seed
    manifest = {
        "config": config.canonical,
        "config_hash": config_hash(config),
        "code_version": version,
        "seeds": {
            "root": root,
            "dataset": derive_seed(root, "dataset"),
            "partition": derive_seed(root, "partition"),
            "init": derive_seed(root, "init"),
            "eval": derive_seed(root, "eval"),
        },
        "started_at": _utc_now(),
        "finished_at": None,
        "status": "running",
        "files": [],
    }
    path = Path(run_dir) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return manifest


def finalize_manifest(run_dir, manifest, files, status="complete"):
    run_dir = Path(run_dir)
    for name in files:
        if not (run_dir / name).exists():
            raise FileNotFoundError(f"manifest inventory entry missing: {name}")
    manifest = dict(manifest)
    manifest["finished_at"] = _utc_now()
    manifest["status"] = status
    manifest["files"] = sorted(files)
    path = run_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return manifest
