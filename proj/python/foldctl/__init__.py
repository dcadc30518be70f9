from ._foldctl import (
    DEFAULT_SEED,
    Controller,
    FoldctlError,
    FoldSystem,
    ScenarioError,
    blow_down,
    blow_up,
    classify,
    run,
    simulate,
    verify,
)

__all__ = [
    "DEFAULT_SEED",
    "Controller",
    "FoldctlError",
    "FoldSystem",
    "ScenarioError",
    "blow_down",
    "blow_up",
    "classify",
    "run",
    "simulate",
    "verify",
]
