"""High-precision rule explanations (anchors) for black-box classifiers.

The pieces, in pipeline order: :mod:`anchorkit.data` loads and discretizes
tabular data, :mod:`anchorkit.models` trains the tree-ensemble black box,
:mod:`anchorkit.perturbation` and :mod:`anchorkit.text` draw conditional
perturbations, :mod:`anchorkit.search` finds anchors, :mod:`anchorkit.linear`
is the linear baseline and :mod:`anchorkit.pick` selects and scores
explanation sets.
"""
__version__ = "0.1.0"

from .data import (
    TEST,
    TRAIN,
    UNKNOWN_BIN,
    VALIDATION,
    Anchor,
    Dataset,
    FeatureSchema,
    Instance,
    Predicate,
    coverage,
    discretize,
    fit_discretizer,
    load_csv,
    predicate_holds,
    prepare_dataset,
    split_dataset,
)
from .errors import AnchorKitError, ConfigError, ContractError, DataError
from .linear import LimeRegion, LinearExplanation, explain_linear, lime_covers, lime_local_predict
from .models import TreeEnsemble, load_model, save_model, train_tree_ensemble
from .perturbation import TabularRowSampler, sample_conditional
from .pick import evaluate, random_pick, submodular_pick, sweep
from .search import (
    PrecisionEstimate,
    SearchConfig,
    certify_anchor,
    estimate_precision,
    exact_precision,
    find_anchor,
    hoeffding_halfwidth,
    select_best_candidate,
)
from .text import BigramLM, TextSampler, fit_bigram_lm, sample_text_conditional
