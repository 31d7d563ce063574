"""Instance generation, relevance labeling, and starting-scenario selection."""

from __future__ import annotations

from .generate import GeneratorParams, generate_instance
from .labeling import LabelReport, label_instance, label_via_rsrp
from .selection import (
    Method,
    Selection,
    SelectionDistribution,
    sample_without_replacement,
    select_scenarios,
    selection_weights,
)
from .training import train_on_instances, training_rows

__all__ = [
    "GeneratorParams",
    "LabelReport",
    "Method",
    "Selection",
    "SelectionDistribution",
    "generate_instance",
    "label_instance",
    "label_via_rsrp",
    "sample_without_replacement",
    "select_scenarios",
    "selection_weights",
    "train_on_instances",
    "training_rows",
]
