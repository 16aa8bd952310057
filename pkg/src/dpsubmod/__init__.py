"""Differentially private online submodular minimization."""

__version__ = "0.1.0"

from .setfunctions import (  # noqa: E402
    SetFunction,
    check_submodular,
    elements_of,
    evaluate,
    make_coverage_function,
    make_cut_function,
    make_modular_function,
    make_table_function,
    mask_of,
)
from .lovasz import (  # noqa: E402
    ChainDecomposition,
    chain_decompose,
    extension_subgradient,
    extension_value,
    regularized_subgradient,
    regularized_value,
    sample_level_set,
)
from .tree import NoisyPrefixSumTree, sample_tree_noise  # noqa: E402
from .learners import (  # noqa: E402
    BanditLearner,
    FullInfoLearner,
    bandit_gradient_estimate,
    bandit_params,
    bandit_sample_set,
    ftal_argmin,
    full_info_params,
)
from .adversaries import Adversary  # noqa: E402
from .harness import RegretTrace, best_fixed_set, fit_regret_slope, run_experiment  # noqa: E402
from .lemmas import verify_lemma_suite  # noqa: E402
