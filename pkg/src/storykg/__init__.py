"""storykg: knowledge-graph-guided QA annotation for story sections."""

__version__ = "0.1.0"

from .kgstore import (  # noqa: F401
    KnowledgeIndex,
    Triple,
    build_index,
    load_snapshot,
    normalize_concept,
    save_snapshot,
)
from .metrics import RougeScore, rouge_l, rouge_l_multi_ref  # noqa: F401
from .ranker import RankedTriple, RankingConfig, rank  # noqa: F401
from .relations import RelationKind  # noqa: F401
