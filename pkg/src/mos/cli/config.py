"""Line-oriented run configuration: ``key = value`` with ``#`` comments.

Every tunable has a named dotted key and a default; unknown keys are an
error so typos cannot silently fall back to defaults. ``seed`` is the one
required key (it may instead be supplied with ``--seed``).
"""

from __future__ import annotations

from dataclasses import dataclass

from ..data.synthetic import SyntheticConfig
from ..exceptions import ArgumentError, ConfigError
from ..model.mos_model import ModelConfig
from ..model.training import StageSchedule, TrainConfig

_SCHEMA: dict[str, tuple[type, object]] = {
    "seed": (int, None),  # required
    "data.users": (int, 500),
    "data.themes": (int, 5),
    "data.items_per_theme": (int, 200),
    "data.dim": (int, 16),
    "data.sigma": (float, 0.15),
    "data.mean_session_length": (float, 10.0),
    "data.p_switch": (float, 0.7),
    "data.reappearance_bias": (float, 1.0),
    "data.max_seq": (int, 200),
    "data.impressions_per_user": (int, 20),
    "data.label_noise": (float, 0.1),
    "model.dim": (int, 16),
    "model.codebook_dim": (int, 32),
    "model.experts": (int, 5),
    "model.top_k": (int, 1),
    "model.window_size": (int, 8),
    "model.window_stride": (int, 4),
    "model.ffn_hidden": (int, 32),
    "model.classifier_hidden": (int, 16),
    "model.alpha_item": (float, 0.25),
    "model.alpha_window": (float, 0.25),
    "model.ema_decay": (float, 0.999),
    "train.learning_rate": (float, 1e-3),
    "train.batch_size": (int, 256),
    "train.epochs": (int, 15),
    "train.stage_epochs": (str, ""),  # optional "backbone,expert,joint" override
    "split.train": (float, 0.8),
    "split.val": (float, 0.1),
    "split.test": (float, 0.1),
}


@dataclass
class RunConfig:
    values: dict[str, object]

    def __getitem__(self, key: str):
        return self.values[key]

    @property
    def seed(self) -> int:
        return int(self.values["seed"])

    def synthetic_config(self) -> SyntheticConfig:
        v = self.values
        try:
            return SyntheticConfig(
                n_themes=v["data.themes"],
                items_per_theme=v["data.items_per_theme"],
                dim=v["data.dim"],
                sigma=v["data.sigma"],
                mean_session_length=v["data.mean_session_length"],
                p_switch=v["data.p_switch"],
                reappearance_bias=v["data.reappearance_bias"],
                max_seq=v["data.max_seq"],
                impressions_per_user=v["data.impressions_per_user"],
                n_users=v["data.users"],
                label_noise=v["data.label_noise"],
                seed=self.seed,
            )
        except ArgumentError as exc:
            raise ConfigError(str(exc)) from exc

    def model_config(self, vocab_size: int) -> ModelConfig:
        v = self.values
        try:
            return ModelConfig(
                vocab_size=vocab_size,
                dim=v["model.dim"],
                codebook_dim=v["model.codebook_dim"],
                n_experts=v["model.experts"],
                top_k=v["model.top_k"],
                window_size=v["model.window_size"],
                window_stride=v["model.window_stride"],
                ffn_hidden=v["model.ffn_hidden"],
                classifier_hidden=v["model.classifier_hidden"],
                alpha_item=v["model.alpha_item"],
                alpha_window=v["model.alpha_window"],
                ema_decay=v["model.ema_decay"],
            )
        except ArgumentError as exc:
            raise ConfigError(str(exc)) from exc

    def schedule(self, backbone_only: bool = False) -> StageSchedule:
        total = int(self.values["train.epochs"])
        if backbone_only:
            return StageSchedule(total, 0, 0)
        override = str(self.values["train.stage_epochs"]).strip()
        if override:
            parts = override.split(",")
            if len(parts) != 3:
                raise ConfigError("train.stage_epochs must be 'backbone,expert,joint'")
            try:
                return StageSchedule(*(int(p) for p in parts))
            except (ValueError, ArgumentError) as exc:
                raise ConfigError(f"bad train.stage_epochs: {exc}") from exc
        return StageSchedule.from_total(total)

    def train_config(self, backbone_only: bool = False) -> TrainConfig:
        try:
            return TrainConfig(
                learning_rate=float(self.values["train.learning_rate"]),
                batch_size=int(self.values["train.batch_size"]),
                schedule=self.schedule(backbone_only),
                seed=self.seed,
            )
        except ArgumentError as exc:
            raise ConfigError(str(exc)) from exc

    def split_ratios(self) -> tuple[float, float, float]:
        return (
            float(self.values["split.train"]),
            float(self.values["split.val"]),
            float(self.values["split.test"]),
        )

    def echo(self, path: str) -> None:
        """Write the fully resolved configuration for exact replay."""
        with open(path, "w", encoding="utf-8") as fh:
            for key in sorted(self.values):
                fh.write(f"{key} = {self.values[key]}\n")


def parse_config(path: str, seed_override: int | None = None) -> RunConfig:
    values: dict[str, object] = {k: default for k, (_, default) in _SCHEMA.items()}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}: line {lineno}: expected 'key = value'")
            key, text = (part.strip() for part in line.split("=", 1))
            if key not in _SCHEMA:
                raise ConfigError(f"{path}: line {lineno}: unknown key {key!r}")
            typ = _SCHEMA[key][0]
            try:
                values[key] = typ(text) if typ is not str else text
            except ValueError as exc:
                raise ConfigError(
                    f"{path}: line {lineno}: {key} expects {typ.__name__} ({exc})"
                ) from exc
    if seed_override is not None:
        values["seed"] = int(seed_override)
    if values["seed"] is None:
        raise ConfigError("missing required key: seed")
    return RunConfig(values)
