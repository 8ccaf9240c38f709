from rank_intent._blackbox import (
    BLACKBOX_NAMES,
    INTENT_SIZE,
    BlackBoxContract,
    DesmBlackBox,
    EmbBlackBox,
    GlassBox,
    GroundTruthIntent,
    PlantedBlackBox,
    RM3BlackBox,
    StrongAgnosticView,
    bb_rank,
    desm_ground_truth,
    desm_score,
    emb_expand,
    make_blackbox,
    relevance_model,
    rm3_expand,
)
from rank_intent._candidates import (
    CandidateSet,
    additive_filter,
    perturb_add,
    perturb_reduce,
    reductive_filter,
    tfidf_candidates,
)
from rank_intent._config import ExperimentConfig
from rank_intent._embeddings import (
    EmbeddingTable,
    cosine,
    load_embeddings,
    mean_vector,
    nearest_terms,
    save_embeddings,
)
from rank_intent._errors import (
    ConfigError,
    ContractError,
    DataError,
    DiscordantPairError,
    QuerySkipped,
    RankIntentError,
)
from rank_intent._harness import (
    ContributionTable,
    ExperimentReport,
    Explanation,
    PairExplanation,
    Workspace,
    explain_pair,
    explain_query,
    load_workspace,
    run_experiment,
    select_candidates,
    term_contributions,
)
from rank_intent._index import (
    OOV_TOKEN,
    Document,
    Index,
    Query,
    build_index,
    dirichlet_retrieve,
    tokenize,
)
from rank_intent._metrics import (
    EvalRecord,
    accuracy,
    global_fidelity,
    kendall_tau,
    local_fidelity,
    recall,
)
from rank_intent._preference import (
    PairSample,
    PreferenceMatrix,
    PreferencePair,
    build_matrix,
    pair_score,
    sample_pairs,
    topk_pairs,
)
from rank_intent._rankers import ExplanationRanker, jm_score
from rank_intent._ranking import RankedDoc, Ranking
from rank_intent._solver import Selection, exact_select, greedy_select, pcov, psum, utility
from rank_intent._strategies import Agnosticism, PsumMode, Sampling
from rank_intent._synthetic import SyntheticCollection, SyntheticSpec, generate_collection

__all__ = [
    "BLACKBOX_NAMES",
    "INTENT_SIZE",
    "OOV_TOKEN",
    "Agnosticism",
    "BlackBoxContract",
    "CandidateSet",
    "ConfigError",
    "ContractError",
    "ContributionTable",
    "DataError",
    "DesmBlackBox",
    "DiscordantPairError",
    "Document",
    "EmbBlackBox",
    "EmbeddingTable",
    "EvalRecord",
    "ExperimentConfig",
    "ExperimentReport",
    "Explanation",
    "ExplanationRanker",
    "GlassBox",
    "GroundTruthIntent",
    "Index",
    "PairExplanation",
    "PairSample",
    "PlantedBlackBox",
    "PreferenceMatrix",
    "PreferencePair",
    "PsumMode",
    "Query",
    "QuerySkipped",
    "RM3BlackBox",
    "RankIntentError",
    "RankedDoc",
    "Ranking",
    "Sampling",
    "Selection",
    "StrongAgnosticView",
    "SyntheticCollection",
    "SyntheticSpec",
    "Workspace",
    "accuracy",
    "additive_filter",
    "bb_rank",
    "build_index",
    "build_matrix",
    "cosine",
    "desm_ground_truth",
    "desm_score",
    "dirichlet_retrieve",
    "emb_expand",
    "exact_select",
    "explain_pair",
    "explain_query",
    "generate_collection",
    "global_fidelity",
    "greedy_select",
    "jm_score",
    "kendall_tau",
    "load_embeddings",
    "load_workspace",
    "local_fidelity",
    "make_blackbox",
    "mean_vector",
    "nearest_terms",
    "pair_score",
    "pcov",
    "perturb_add",
    "perturb_reduce",
    "psum",
    "recall",
    "reductive_filter",
    "relevance_model",
    "rm3_expand",
    "run_experiment",
    "sample_pairs",
    "save_embeddings",
    "select_candidates",
    "term_contributions",
    "tfidf_candidates",
    "tokenize",
    "topk_pairs",
    "utility",
]
