"""netsumm: interactive document-network summarization.

Builds TF-IDF similarity graphs over document corpora, learns analyst-
steered partitions with feedback-constrained Q-learning, and serves
hierarchical summaries with two-step force-directed layouts.
"""

from .corpus import Corpus, CorpusError, Document, build_corpus, load_corpus, tfidf, top_terms
from .feedback import (
    FeedbackConflict,
    FeedbackError,
    FeedbackGraphs,
    InteractionEvent,
    apply_interaction,
    feasibility_check,
    is_fully_satisfied,
    project_feedback,
    satisfaction,
)
from .netgraph import (
    Assignment,
    DocumentGraph,
    GraphError,
    SummaryGraph,
    build_document_graph,
    build_summary,
    f_prob,
    induced_subgraph,
    merge_supernode,
)
from .qlearn import (
    Action,
    Hyperparameters,
    QModel,
    TrainResult,
    encode_state,
    load_model,
    q_forward,
    reapply,
    reward,
    save_model,
    select_action,
    td_update,
    train,
    transition,
)
from .summarizer import Hierarchy, hierarchical_summarize, select_best_level
from .layout import ForceConfig, LayoutResult, force_layout, two_step_layout
from .evaluation import (
    ExperimentConfig,
    GroundTruth,
    brute_force_oracle,
    generate_synthetic_corpus,
    purity_rho,
    run_experiment,
    sample_feedback,
    spectral_baseline,
)

__version__ = "0.1.0"
