"""Scorers and their JSON round trip."""
from .base import ConstantModel, Model, RandomScorer, ensemble_average
from .boosted import BoostedModel, BoostHParams, fit_boosted
from .gam import GamHParams, GamModel, fit_cyclic_gam
from .naive_bayes import NaiveBayesModel, fit_naive_bayes
from .rules import BUILTIN_RULES, Rule, RuleModel, rule_score, rule_scores
from .tree import TreeModel, fit_tree

_VARIANTS = {cls.variant: cls for cls in (ConstantModel, RandomScorer, BoostedModel, GamModel,
                                          NaiveBayesModel, RuleModel, TreeModel)}


def model_from_dict(d: dict) -> Model:
    from ..errors import ConfigError

    try:
        cls = _VARIANTS[d["variant"]]
    except KeyError:
        raise ConfigError(f"unknown model variant {d.get('variant')!r}") from None
    return cls.from_dict(d)


__all__ = [
    "BUILTIN_RULES", "BoostHParams", "BoostedModel", "ConstantModel", "GamHParams", "GamModel", "Model",
    "NaiveBayesModel", "RandomScorer", "Rule", "RuleModel", "TreeModel", "ensemble_average", "fit_boosted",
    "fit_cyclic_gam", "fit_naive_bayes", "fit_tree", "model_from_dict", "rule_score", "rule_scores",
]
