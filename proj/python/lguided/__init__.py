"""Label-guided text classification (BiLSTM encoder + label-attentive encoding)."""

from ._lguided import *  # noqa: F401,F403
