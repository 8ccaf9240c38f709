from __future__ import annotations

from enum import IntEnum
from typing import TypeVar

from rank_intent._errors import ConfigError

E = TypeVar("E", bound=IntEnum)


class Agnosticism(IntEnum):
    WEAK = 0
    STRONG = 1


class Sampling(IntEnum):
    TOPK = 0
    RANDOM = 1
    RANK_BIASED = 2
    TOPK_RANDOM = 3
    TOPK_RANK_RANDOM = 4

    @property
    def includes_topk(self) -> bool:
        return self in (Sampling.TOPK, Sampling.TOPK_RANDOM, Sampling.TOPK_RANK_RANDOM)

    @property
    def label(self) -> str:
        return self.name.lower().replace("_", "-")


class PsumMode(IntEnum):
    POSITIVE = 0
    COVERED = 1


def resolve(enum_cls: type[E], value: str | int | E) -> E:
    """Accept an enum member, its int value, or its name (any case, '-' or '_')."""
    if isinstance(value, enum_cls):
        return value
    if isinstance(value, bool):
        raise ConfigError(f"{enum_cls.__name__} cannot be a bool")
    if isinstance(value, int):
        try:
            return enum_cls(value)
        except ValueError:
            raise ConfigError(f"Unknown {enum_cls.__name__} value: {value!r}") from None
    if isinstance(value, str):
        key = value.strip().upper().replace("-", "_")
        try:
            return enum_cls[key]
        except KeyError:
            names = ", ".join(m.name.lower().replace("_", "-") for m in enum_cls)
            raise ConfigError(
                f"Unknown {enum_cls.__name__}: {value!r}. Use one of: {names}."
            ) from None
    raise ConfigError(
        f"{enum_cls.__name__} must be a member, int, or str, got {type(value).__name__}"
    )
