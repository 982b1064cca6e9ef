"""On-disk cache for materialized balls.

Cache entries are pickle files keyed by (model hash, radius, format version,
library version); any mismatch invalidates the entry and the ball is rebuilt.
The cache directory comes from COARSEGEO_CACHE_DIR, defaulting to
~/.cache/coarsegeo.
"""

from __future__ import annotations

import os
import pickle
from pathlib import Path

from . import __version__
from .graph import BallGraph
from .models import GroupModel

CACHE_FORMAT = 1
ENV_VAR = "COARSEGEO_CACHE_DIR"


def cache_dir() -> Path:
    env = os.environ.get(ENV_VAR)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "coarsegeo"


def _entry_path(model: GroupModel, radius: int) -> Path:
    return cache_dir() / f"ball_{model.model_hash()}_r{radius}.pkl"


def save_ball(ball: BallGraph) -> Path:
    path = _entry_path(ball.model, ball.radius)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format": CACHE_FORMAT,
        "library_version": __version__,
        "model": ball.model.describe(),
        "model_hash": ball.model.model_hash(),
        "radius": ball.radius,
        "keys": [e.key for e in ball.elements],
    }
    tmp = path.with_suffix(".tmp")
    with tmp.open("wb") as handle:
        pickle.dump(payload, handle, protocol=pickle.HIGHEST_PROTOCOL)
    tmp.replace(path)
    return path


def load_ball(model: GroupModel, radius: int) -> BallGraph | None:
    path = _entry_path(model, radius)
    if not path.exists():
        return None
    try:
        with path.open("rb") as handle:
            payload = pickle.load(handle)
    except Exception:
        return None
    if (
        payload.get("format") != CACHE_FORMAT
        or payload.get("library_version") != __version__
        or payload.get("model_hash") != model.model_hash()
        or payload.get("radius") != radius
    ):
        return None
    elements = [model.element(k) for k in payload["keys"]]
    return BallGraph(model, radius, elements, adjacency=None)


def build_ball_cached(model: GroupModel, radius: int, use_cache: bool = True,
                      max_vertices: int = 2_000_000) -> BallGraph:
    if use_cache:
        ball = load_ball(model, radius)
        if ball is not None:
            return ball
    ball = BallGraph.build(model, radius, max_vertices=max_vertices)
    if use_cache:
        try:
            save_ball(ball)
        except OSError:
            pass
    return ball
