"""Payload fixtures: standalone simulation scripts and scripted corpora for
driving the asa harness deterministically."""

from .corpora import SCENARIOS, UnknownScenario, corpus_bundle
from .scripts import PayloadScript, provided_rw_payload

__all__ = [
    "SCENARIOS",
    "UnknownScenario",
    "corpus_bundle",
    "PayloadScript",
    "provided_rw_payload",
]

__version__ = "0.1.0"
