"""Learn continuous valence-arousal-dominance (VAD) emotion scores from text
that carries only categorical emotion labels.

Labels are placed in VAD space via a word lexicon, sorted per dimension, and a
small text encoder is trained with squared earth-mover's-distance losses
against the sorted label distributions.  Expectations of the predicted
distributions give continuous VAD scores; products across dimensions recover
categorical labels.
"""

__version__ = "0.1.0"
