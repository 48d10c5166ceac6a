"""Tabular Q-learning with a delayed Q-update for grid-connected microgrid
dispatch, with an exact dynamic-programming reference."""
from .config import RunConfig, load_config
from .dp import backward_induction, brute_force_oracle, evaluate_policy
from .env import Action, Exogenous, MicrogridParams, State, step
from .learner import Hyperparams, QTable, train
from .spaces import build_spaces
from .tabular import build_tabular

__all__ = [
    "Action",
    "Exogenous",
    "Hyperparams",
    "MicrogridParams",
    "QTable",
    "RunConfig",
    "State",
    "backward_induction",
    "brute_force_oracle",
    "build_spaces",
    "build_tabular",
    "evaluate_policy",
    "load_config",
    "step",
    "train",
]
