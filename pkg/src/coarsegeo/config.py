"""Experiment configuration: loading, validation, and defaults.

Configs are JSON or YAML mappings with a documented shape (see SCHEMA_DOC).
Validation errors carry the dotted path of the offending entry.  A fixed
seed makes the whole run deterministic, including report bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import yaml

from .errors import ConfigError
from .models import GroupModel

KINDS = ("contract", "quasiconvex", "constants", "admissible-mc", "amalgam", "hnn", "transition")

SCHEMA_DOC = """\
Config schema (JSON or YAML mapping):

  kind: one of contract | quasiconvex | constants | admissible-mc | amalgam
        | hnn | transition                                        (required)
  seed: integer RNG seed, default 0
  model:                                                          (required)
    kind: free | free_abelian | free_product
    rank: integer (free / free_abelian)
    ranks: list of integers (free_product)
    peripheral: list of factor indices (free_product only;
                default: every factor)
  radius: ball radius for measurements, kind-specific default
  params: kind-specific mapping, all entries optional:
    contract:      subset_factor, subset_rep, mode (exhaustive-tree|sampled),
                   bound, sample_pairs, pair_budget
    quasiconvex:   U_list, random_cosets, max_rep_len
    constants:     lam, c, rates {mu, epsilon, tau, nu_linear [a, b],
                   sigma (formula|explicit)} OR measure {factors, pair_budget}
    admissible-mc: count, mc_radius, axis_factor, pair_budget
    amalgam:       scale (auto|int), syllable_bound, coeffs, H_factor,
                   K_factor, pair_budget
    hnn:           N, t_letters, h_syllables, exponents, H_depth, M_pairs,
                   pair_budget
    transition:    subgroup (list of words), depth, U, L (auto|int), M_bound,
                   pairs, conjugator_radius, lift_samples, lift_U_list
  output_dir: directory for report artifacts (CLI --out overrides)
"""


def load_config(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    text = path.read_text()
    if path.suffix in (".yaml", ".yml"):
        data = yaml.safe_load(text)
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError:
            data = yaml.safe_load(text)
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    return data


def _expect(cond: bool, message: str, path: str):
    if not cond:
        raise ConfigError(message, path=path)


def validate_config(raw: dict) -> dict:
    """Validate and normalize a config mapping; returns a fresh dict."""
    cfg = dict(raw)
    kind = cfg.get("kind")
    _expect(kind in KINDS, f"kind must be one of {KINDS}, got {kind!r}", "kind")
    seed = cfg.get("seed", 0)
    _expect(isinstance(seed, int), "seed must be an integer", "seed")
    model = cfg.get("model")
    _expect(isinstance(model, dict), "model section is required", "model")
    mkind = model.get("kind")
    _expect(
        mkind in ("free", "free_abelian", "free_product"),
        f"model.kind must be free | free_abelian | free_product, got {mkind!r}",
        "model.kind",
    )
    if mkind in ("free", "free_abelian"):
        rank = model.get("rank")
        _expect(isinstance(rank, int) and rank >= 1, "rank must be a positive integer", "model.rank")
    else:
        ranks = model.get("ranks")
        _expect(
            isinstance(ranks, list) and ranks and all(isinstance(r, int) and r >= 1 for r in ranks),
            "ranks must be a nonempty list of positive integers",
            "model.ranks",
        )
        peripheral = model.get("peripheral")
        if peripheral is not None:
            _expect(
                isinstance(peripheral, list)
                and all(isinstance(p, int) and 0 <= p < len(ranks) for p in peripheral),
                "peripheral must list factor indices",
                "model.peripheral",
            )
    radius = cfg.get("radius")
    if radius is not None:
        _expect(isinstance(radius, int) and radius >= 0, "radius must be a nonnegative integer", "radius")
    params = cfg.get("params", {})
    _expect(isinstance(params, dict), "params must be a mapping", "params")
    cfg["seed"] = seed
    cfg["params"] = dict(params)
    return cfg


def build_model(model_cfg: dict) -> GroupModel:
    kind = model_cfg["kind"]
    if kind == "free":
        return GroupModel.free(model_cfg["rank"])
    if kind == "free_abelian":
        return GroupModel.free_abelian(model_cfg["rank"])
    ranks = model_cfg["ranks"]
    peripheral = model_cfg.get("peripheral")
    return GroupModel.free_product(ranks, peripheral_factors=peripheral)
