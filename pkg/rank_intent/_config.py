"""Experiment configuration: one flat JSON object with documented defaults."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import warnings
from dataclasses import dataclass, field
from typing import Any

from rank_intent._errors import ConfigError
from rank_intent._strategies import Agnosticism, PsumMode, Sampling, resolve

# features sampled per query when the config leaves ``features`` unset
DEFAULT_FEATURES = {Agnosticism.STRONG: 2500, Agnosticism.WEAK: 500}

# keys that change where outputs go or how fast they arrive, never what they contain
_NOT_FINGERPRINTED = frozenset({"output_dir", "workers"})


@dataclass(frozen=True)
class ExperimentConfig:
    corpus_path: str | None = None
    queries_path: str | None = None
    embeddings_path: str | None = None
    intents_path: str | None = None
    index_path: str | None = None
    output_dir: str = "runs"

    blackbox: str = "rm3-10"
    mode: Agnosticism = Agnosticism.WEAK
    sampling: Sampling = Sampling.TOPK_RANDOM
    samplings: tuple[Sampling, ...] = ()
    features: int | None = None
    feature_sweep: tuple[int, ...] = ()
    perturb: bool | None = None

    caps: tuple[int, int, int] = (1000, 500, 250)
    k: int = 10
    budget: int = 10
    pool_size: int = 1000
    reductive_top: int = 10
    reductive_extra: int = 40
    n_add: int = 5

    delta: float = 1.0
    alpha: float = 0.4
    mu: float = 2000.0
    gamma: float = 0.9

    seed: int = 0
    query_anchor: bool = False
    psum_mode: PsumMode = PsumMode.POSITIVE
    exact: bool = False
    stem: bool = False
    workers: int = 1
    keep_intermediates: bool = False

    _explicit: frozenset[str] = field(default=frozenset(), repr=False, compare=False)

    def __post_init__(self) -> None:
        set_ = object.__setattr__
        set_(self, "mode", resolve(Agnosticism, self.mode))
        set_(self, "sampling", resolve(Sampling, self.sampling))
        set_(self, "psum_mode", resolve(PsumMode, self.psum_mode))
        set_(self, "samplings", tuple(resolve(Sampling, s) for s in self.samplings))
        set_(self, "caps", tuple(int(c) for c in self.caps))
        set_(self, "feature_sweep", tuple(int(m) for m in self.feature_sweep))
        self._validate()

    def _validate(self) -> None:
        if len(self.caps) != 3:
            raise ConfigError(
                f"caps needs three values (tfidf, reductive, additive), got {self.caps}"
            )
        if any(c < 1 for c in self.caps):
            raise ConfigError(f"caps must be positive, got {self.caps}")
        if not self.caps[0] >= self.caps[1] >= self.caps[2]:
            raise ConfigError(f"caps must not grow from stage to stage, got {self.caps}")
        for name in ("k", "budget", "pool_size", "reductive_top", "n_add", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.reductive_extra < 0:
            raise ConfigError(f"reductive_extra must be >= 0, got {self.reductive_extra}")
        if self.features is not None and self.features < 1:
            raise ConfigError(f"features must be >= 1, got {self.features}")
        if any(m < 1 for m in self.feature_sweep):
            raise ConfigError(f"feature_sweep values must be >= 1, got {self.feature_sweep}")
        for name in ("delta", "mu"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.mode is Agnosticism.STRONG and self.perturb:
            raise ConfigError(
                "strong agnosticism exposes no scores: perturbation filters need mode='weak'"
            )
        if self.mode is Agnosticism.STRONG and "caps" in self._explicit:
            warnings.warn(
                "the reductive and additive caps have no effect under strong agnosticism",
                UserWarning,
                stacklevel=4,
            )
        if self.features is not None and self.sampling is Sampling.TOPK and not self.samplings:
            warnings.warn(
                "features has no effect with sampling='topk'", UserWarning, stacklevel=4
            )

    @property
    def uses_perturbation(self) -> bool:
        if self.perturb is None:
            return self.mode is Agnosticism.WEAK
        return self.perturb

    @property
    def effective_features(self) -> int:
        return self.features if self.features is not None else DEFAULT_FEATURES[self.mode]

    @property
    def sampling_plan(self) -> tuple[Sampling, ...]:
        return self.samplings or (self.sampling,)

    @classmethod
    def from_mapping(
        cls, values: dict[str, Any], *, explicit: frozenset[str] | None = None
    ) -> ExperimentConfig:
        """Build from plain values (enum names, lists) with unknown keys rejected.

        ``explicit`` names the keys the user actually set (default: all of ``values``).
        """
        known = {f.name for f in dataclasses.fields(cls) if not f.name.startswith("_")}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigError(f"Unknown config keys: {', '.join(unknown)}")
        kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in values.items()}
        try:
            return cls(**kwargs, _explicit=frozenset(values) if explicit is None else explicit)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config value: {exc}") from None

    @classmethod
    def from_file(cls, path: str | os.PathLike[str]) -> ExperimentConfig:
        try:
            with open(path, encoding="utf-8") as fh:
                values = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from None
        if not isinstance(values, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_mapping(values)

    def replace(self, **overrides: Any) -> ExperimentConfig:
        """Validated copy with ``overrides`` applied."""
        values = self.to_dict()
        values.update(overrides)
        explicit = self._explicit | frozenset(overrides)
        return ExperimentConfig.from_mapping(values, explicit=explicit)

    def to_dict(self) -> dict[str, Any]:
        """Plain JSON-ready values; enums by their lowercase names."""
        out: dict[str, Any] = {}
        for f in dataclasses.fields(self):
            if f.name.startswith("_"):
                continue
            value = getattr(self, f.name)
            if isinstance(value, (Agnosticism, Sampling, PsumMode)):
                value = _label(value)
            elif isinstance(value, tuple):
                value = [_label(v) if isinstance(v, Sampling) else v for v in value]
            out[f.name] = value
        return out

    def fingerprint(self) -> str:
        """SHA-256 of the canonical JSON of every option that affects results."""
        payload = {k: v for k, v in self.to_dict().items() if k not in _NOT_FINGERPRINTED}
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _label(member: Agnosticism | Sampling | PsumMode) -> str:
    return member.name.lower().replace("_", "-")
