"""Topic taxonomy construction from text corpora.

Builds a tree of topics by recursively clustering term embeddings on the
unit sphere, pushing overly-general terms up to parent topics, and
retraining embeddings on each topic's own documents for sharper
distinctions at deeper levels.
"""

from .assignment import (
    BM25Params,
    DocEmbedding,
    SubTopicDocs,
    assign_documents,
    build_subcorpus,
    compute_doc_embeddings,
    retrieve_expansion,
)
from .cluster import ClusterAssignment, spherical_kmeans
from .corpus import Corpus, Document, TermSet, load_corpus, mine_terms, tokenize
from .embedding import (
    EmbeddingTable,
    TrainConfig,
    nearest_terms,
    pair_loss_and_grad,
    train_skipgram,
)
from .evaluation import (
    DBReport,
    db_index,
    db_report,
    make_intrusion_packet,
    make_relation_packet,
)
from .splitter import (
    DegenerateSplitError,
    RepresentativenessScore,
    SplitResult,
    adaptive_split,
    bm25_rel,
    concentration,
    popularity,
    representativeness,
    select_label,
)
from .taxonomy import (
    BuildConfig,
    Taxonomy,
    TaxonomySchemaError,
    TopicNode,
    build_taxonomy,
    export_taxonomy,
    import_taxonomy,
)

__version__ = "0.1.0"

__all__ = [
    "BM25Params",
    "BuildConfig",
    "ClusterAssignment",
    "Corpus",
    "DBReport",
    "DegenerateSplitError",
    "DocEmbedding",
    "Document",
    "EmbeddingTable",
    "RepresentativenessScore",
    "SplitResult",
    "SubTopicDocs",
    "Taxonomy",
    "TaxonomySchemaError",
    "TermSet",
    "TopicNode",
    "TrainConfig",
    "adaptive_split",
    "assign_documents",
    "bm25_rel",
    "build_subcorpus",
    "build_taxonomy",
    "compute_doc_embeddings",
    "concentration",
    "db_index",
    "db_report",
    "export_taxonomy",
    "import_taxonomy",
    "load_corpus",
    "make_intrusion_packet",
    "make_relation_packet",
    "mine_terms",
    "nearest_terms",
    "pair_loss_and_grad",
    "popularity",
    "representativeness",
    "retrieve_expansion",
    "select_label",
    "spherical_kmeans",
    "tokenize",
    "train_skipgram",
]
