"""Top-level package module."""

__version__ = "0.1.0"

from polarhe.experiment import DecouplingExperiment
from polarhe.slide.pipeline import SlidePipeline
