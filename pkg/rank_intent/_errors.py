class RankIntentError(Exception):
    """Base class for every error raised by rank_intent."""


class ConfigError(RankIntentError, ValueError):
    """Invalid or contradictory configuration."""


class DataError(RankIntentError, ValueError):
    """Input data that cannot be used: malformed files, empty indexes, unknown ids."""


class ContractError(RankIntentError, TypeError):
    """An operation needs more access to the black box than its agnosticism grants."""


class DiscordantPairError(RankIntentError):
    """The black box and the explanation order a document pair differently.

    An explanation only accounts for pairs both rankings agree on, so this is
    reported instead of a contribution table.
    """

    def __init__(
        self, doc_a: str, doc_b: str, bb_ranks: tuple[int, int], expl_ranks: tuple[int, int]
    ) -> None:
        self.doc_a = doc_a
        self.doc_b = doc_b
        self.bb_ranks = bb_ranks
        self.expl_ranks = expl_ranks
        super().__init__(
            f"pair ({doc_a!r}, {doc_b!r}) is discordant: black box ranks {bb_ranks}, "
            f"explanation ranks {expl_ranks}"
        )


class QuerySkipped(RankIntentError):
    """A query the pipeline cannot explain (nothing retrieved, no embedded term, no pairs)."""

    def __init__(self, query_id: str, reason: str) -> None:
        self.query_id = query_id
        self.reason = reason
        super().__init__(f"query {query_id!r} skipped: {reason}")
