"""Flat key=value run configuration.

One option per line, ``key = value``, with ``#`` comments and blank lines
ignored. Unknown keys are an error (they are nearly always typos), as are
duplicates and values that fail to parse. Every run writes its fully
resolved configuration (defaults included) next to its outputs so a run
directory is self-describing.
"""

from .train import TrainConfig


class ConfigError(ValueError):
    """Bad key, bad value, or unreadable config text."""


def _parse_bool(text):
    lowered = text.lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


# key -> (parser, default)
SCHEMA = {
    "dataset": (str, "ring8"),
    "generator_output": (str, "identity"),
    "iterations": (int, 5000),
    "latent_dim": (int, 2),
    "hidden": (int, 128),
    "batch_data": (int, 64),
    "batch_gen": (int, 64),
    "batch_freq": (int, 64),
    "batch_sigma": (int, 64),
    "lr": (float, 2e-4),
    "adam_beta1": (float, 0.5),
    "adam_beta2": (float, 0.999),
    "alpha": (float, 0.5),
    "eps": (float, 1e-12),
    "recip_weight": (float, 1.0),
    "z_variance": (float, 0.3),
    "t_variance": (float, 1.0),
    "use_tnet": (_parse_bool, True),
    "use_anchor": (_parse_bool, True),
    "use_reciprocal": (_parse_bool, True),
    "seed": (int, 0),
    "checkpoint_interval": (int, 1000),
}


def defaults():
    return {key: default for key, (_, default) in SCHEMA.items()}


def parse_config(text):
    """Parse config text into a partial dict (no defaults applied)."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, "
                              f"got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        parser, _ = SCHEMA[key]
        try:
            out[key] = parser(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}")
    return out


def read_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    return parse_config(text)


def resolve(overrides=None):
    """Defaults overlaid with overrides; returns the full dict."""
    cfg = defaults()
    if overrides:
        for key, value in overrides.items():
            if key not in SCHEMA:
                raise ConfigError(f"unknown key {key!r}")
            cfg[key] = value
    return cfg


def format_config(cfg):
    """Render a resolved config as canonical key = value text."""
    lines = []
    for key in SCHEMA:
        value = cfg[key]
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"


def to_train_config(cfg):
    """Build a TrainConfig from a resolved config dict."""
    try:
        return TrainConfig(
            iterations=cfg["iterations"],
            latent_dim=cfg["latent_dim"],
            hidden=cfg["hidden"],
            batch_data=cfg["batch_data"],
            batch_gen=cfg["batch_gen"],
            batch_freq=cfg["batch_freq"],
            batch_sigma=cfg["batch_sigma"],
            lr=cfg["lr"],
            adam_betas=(cfg["adam_beta1"], cfg["adam_beta2"]),
            alpha=cfg["alpha"],
            eps=cfg["eps"],
            recip_weight=cfg["recip_weight"],
            z_variance=cfg["z_variance"],
            t_variance=cfg["t_variance"],
            use_tnet=cfg["use_tnet"],
            use_anchor=cfg["use_anchor"],
            use_reciprocal=cfg["use_reciprocal"],
            seed=cfg["seed"],
            checkpoint_interval=cfg["checkpoint_interval"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc))
