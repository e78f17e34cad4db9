"""The fixed catalogue of derivation rule identifiers and their arities.

Arity is (min_premises, max_premises); max None means unbounded.
"""
from __future__ import annotations

RULES: dict[str, tuple[int, int | None]] = {
    # distribution construction
    "base": (0, 0),
    "extend": (1, 1),
    "extend_det": (1, 1),
    "unknown": (0, 0),
    # random variables
    "identity1": (0, 0),
    "identity2": (0, 0),
    "bot": (1, 1),
    "var_i_prod": (2, 2),
    "var_e_prod_l": (2, 2),
    "var_e_prod_r": (2, 2),
    "var_i_sum": (2, 2),
    "var_e_sum_l": (2, 2),
    "var_e_sum_r": (2, 2),
    "var_i_arrow": (1, 1),
    "var_e_arrow": (2, 2),
    # single experiments (deterministic outputs)
    "experiment": (0, 0),
    "exp_i_prod": (2, 2),
    "exp_e_prod_l": (1, 1),
    "exp_e_prod_r": (1, 1),
    "exp_i_sum": (1, 1),
    "exp_e_sum_l": (2, 2),
    "exp_e_sum_r": (2, 2),
    "exp_i_arrow": (1, 1),
    "exp_e_arrow": (2, 2),
    # expected probabilities and sampling
    "expectation": (0, 0),
    "sampling": (1, None),
    "update": (2, 2),
    "samp_i_sum": (2, 2),
    "samp_e_sum_l": (2, 2),
    "samp_e_sum_r": (2, 2),
    "samp_i_prod": (2, 2),
    "samp_e_prod_l": (2, 2),
    "samp_e_prod_r": (2, 2),
    "samp_i_arrow": (1, 1),
    "samp_e_arrow": (2, 2),
    # prior update
    "bayes_i": (1, None),
    "bayes_e": (2, 2),
    # trust fragment
    "trust_i": (2, 2),
    "trust_e": (1, 1),
    "utrust_i": (2, 2),
    "utrust_e": (1, 1),
    # structural
    "weakening": (2, 2),
    "contraction": (1, 1),
    "cut": (2, 2),
    # leaf for modelling assumptions that no printed rule derives
    "assumption": (0, 0),
}
