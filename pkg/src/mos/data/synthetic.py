"""Synthetic session-hopping interaction logs with full ground truth.

Each user's latent interest walks over themes in sessions: the theme is
stable for a geometrically distributed number of events, then at each
session end it switches with probability ``p_switch`` to a different theme
drawn with recency bias (recently visited themes are favored, so interests
reappear). Item vectors live on the unit sphere, clustered by theme around
near-orthogonal centers.

The emitted event log interleaves plain interaction rows with impression
rows: an impression shows either an item of the user's current theme (true
label 1) or an item of a uniformly random other theme (true label 0), with
labels flipped at rate ``label_noise``. Clicked impression rows join the
history stream, exactly as ingestion would treat them, so an exported log
re-ingests to the identical dataset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import ArgumentError
from ..numerics.rng import RngStream
from .types import (
    INTERACTION_LABEL,
    LabeledDataset,
    UserEvents,
    build_impressions,
)

_STREAM_CENTERS = 0
_STREAM_ITEMS = 1
_STREAM_USERS = 16


@dataclass(frozen=True)
class SyntheticConfig:
    n_themes: int = 5
    items_per_theme: int = 200
    dim: int = 16
    sigma: float = 0.15
    mean_session_length: float = 10.0
    p_switch: float = 0.7
    reappearance_bias: float = 1.0
    max_seq: int = 200
    impressions_per_user: int = 20
    n_users: int = 500
    label_noise: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.n_themes < 2:
            raise ArgumentError("need at least 2 themes")
        if self.n_themes > self.dim:
            raise ArgumentError("need n_themes <= dim for near-orthogonal centers")
        if self.items_per_theme < 1 or self.n_users < 1 or self.impressions_per_user < 1:
            raise ArgumentError("items_per_theme, n_users, impressions_per_user must be >= 1")
        if self.sigma < 0:
            raise ArgumentError("sigma must be >= 0")
        if self.mean_session_length < 1:
            raise ArgumentError("mean session length must be >= 1")
        if not (0.0 <= self.p_switch <= 1.0):
            raise ArgumentError("p_switch must lie in [0, 1]")
        if self.reappearance_bias < 0:
            raise ArgumentError("reappearance bias must be >= 0")
        if self.max_seq < 1:
            raise ArgumentError("max_seq must be >= 1")
        if not (0.0 <= self.label_noise < 0.5):
            raise ArgumentError("label noise must lie in [0, 0.5)")

    @property
    def n_items(self) -> int:
        return self.n_themes * self.items_per_theme


@dataclass
class Trajectory:
    themes: np.ndarray  # latent theme per event
    switch_draws: list[bool]  # one entry per session end (True = theme changed)
    session_index: np.ndarray  # session counter per event


def simulate_theme_trajectory(cfg: SyntheticConfig, rng: RngStream, steps: int) -> Trajectory:
    """Markov session walk over themes for ``steps`` events."""
    gen = rng.generator()
    p_geo = 1.0 / cfg.mean_session_length
    themes = np.empty(steps, dtype=np.int64)
    session_index = np.empty(steps, dtype=np.int64)
    switch_draws: list[bool] = []
    last_session_of_theme = np.full(cfg.n_themes, -1, dtype=np.int64)

    theme = int(gen.integers(0, cfg.n_themes))
    session = 0
    remaining = int(gen.geometric(p_geo))
    last_session_of_theme[theme] = 0
    for t in range(steps):
        themes[t] = theme
        session_index[t] = session
        remaining -= 1
        if remaining == 0:
            switched = bool(gen.random() < cfg.p_switch)
            switch_draws.append(switched)
            session += 1
            if switched:
                theme = _pick_next_theme(cfg, gen, theme, session, last_session_of_theme)
            last_session_of_theme[theme] = session
            remaining = int(gen.geometric(p_geo))
    return Trajectory(themes, switch_draws, session_index)


def _pick_next_theme(cfg, gen, current, session, last_session_of_theme) -> int:
    candidates = [i for i in range(cfg.n_themes) if i != current]
    weights = np.empty(len(candidates))
    for j, cand in enumerate(candidates):
        last = last_session_of_theme[cand]
        recency = 0.0 if last < 0 else 1.0 / (1.0 + (session - last))
        weights[j] = np.exp(cfg.reappearance_bias * recency)
    weights /= weights.sum()
    return int(candidates[gen.choice(len(candidates), p=weights)])


def _theme_centers(cfg: SyntheticConfig, rng: RngStream) -> np.ndarray:
    """K exactly-orthonormal directions (Gram-Schmidt on gaussian draws)."""
    gen = rng.generator()
    centers = gen.normal(size=(cfg.n_themes, cfg.dim))
    for i in range(cfg.n_themes):
        for j in range(i):
            centers[i] -= (centers[i] @ centers[j]) * centers[j]
        centers[i] /= np.linalg.norm(centers[i])
    return centers


def _item_vectors(cfg: SyntheticConfig, centers: np.ndarray, rng: RngStream):
    gen = rng.generator()
    themes = np.repeat(np.arange(cfg.n_themes), cfg.items_per_theme)
    vectors = centers[themes] + cfg.sigma * gen.normal(size=(cfg.n_items, cfg.dim))
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    return vectors, themes


def generate_synthetic(cfg: SyntheticConfig) -> LabeledDataset:
    """Full dataset: event logs, impressions, and ground truth."""
    root = RngStream(cfg.seed)
    centers = _theme_centers(cfg, root.substream(_STREAM_CENTERS))
    vectors, item_themes = _item_vectors(cfg, centers, root.substream(_STREAM_ITEMS))

    n_events = cfg.max_seq + cfg.impressions_per_user
    anchor_step = n_events / cfg.impressions_per_user
    anchors = {int(np.floor((j + 1) * anchor_step)) - 1 for j in range(cfg.impressions_per_user)}

    events: list[UserEvents] = []
    impressions = []
    boundaries: dict[int, np.ndarray] = {}
    total_transitions = 0
    total_switches = 0
    for user in range(cfg.n_users):
        user_rng = root.substream(_STREAM_USERS + user)
        traj = simulate_theme_trajectory(cfg, user_rng, n_events)
        gen = user_rng.substream(1).generator()
        items = np.empty(n_events, dtype=np.int64)
        labels = np.full(n_events, INTERACTION_LABEL, dtype=np.int64)
        for t in range(n_events):
            theme = int(traj.themes[t])
            if t in anchors:
                positive = bool(gen.random() < 0.5)
                if positive:
                    item_theme = theme
                else:
                    others = [i for i in range(cfg.n_themes) if i != theme]
                    item_theme = others[int(gen.integers(0, len(others)))]
                true_label = 1 if positive else 0
                flip = bool(gen.random() < cfg.label_noise)
                labels[t] = (1 - true_label) if flip else true_label
            else:
                item_theme = theme
            items[t] = item_theme * cfg.items_per_theme + int(
                gen.integers(0, cfg.items_per_theme)
            )
        user_events = UserEvents(
            user_id=user,
            items=items,
            timestamps=np.arange(n_events, dtype=np.int64),
            labels=labels,
        )
        events.append(user_events)
        impressions.extend(build_impressions(user_events, cfg.max_seq))
        eligible = labels != 0
        eligible_themes = traj.themes[eligible]
        boundaries[user] = np.flatnonzero(np.diff(eligible_themes) != 0) + 1
        total_transitions += len(traj.switch_draws)
        total_switches += sum(traj.switch_draws)

    meta = {
        "seed": str(cfg.seed),
        "themes": str(cfg.n_themes),
        "max_seq": str(cfg.max_seq),
        "users": str(cfg.n_users),
        "items": str(cfg.n_items),
        "impressions": str(len(impressions)),
        "events": str(cfg.n_users * n_events),
        "dim": str(cfg.dim),
        "session_transitions": str(total_transitions),
        "session_switches": str(total_switches),
    }
    return LabeledDataset(
        impressions=impressions,
        events=events,
        n_items=cfg.n_items,
        item_themes=item_themes,
        item_vectors=vectors,
        boundaries=boundaries,
        meta=meta,
    )
