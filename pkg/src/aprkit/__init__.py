"""Multilingual program-repair toolkit.

Pipeline stages: corpus preprocessing, input encoding, checkpoint-ensemble patch
generation (mock or external generator processes), candidate ranking, test-suite
validation, and benchmark evaluation. See the ``aprkit`` CLI for the wiring.
"""

__version__ = "0.1.0"
