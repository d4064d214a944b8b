"""Generator-protocol adapter around an encoder-decoder patch model.

``finetune`` trains a small text-to-text transformer on a bug-fix corpus and
saves k checkpoints at fractional-epoch intervals; ``serve`` exposes one
checkpoint over the line-JSON generator protocol (hello / tokenize / generate).
One process holds exactly one checkpoint; an ensemble is k processes.
"""

__version__ = "0.1.0"
