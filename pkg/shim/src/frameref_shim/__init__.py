"""Reference judging service: POST /v1/judge returns teacher-forced
per-token label logprobs from a local causal language model, plus
first-token probabilities for audit. The protocol, not the model, is
the contract — any small causal model works."""

__version__ = "0.1.0"

from .config import ShimConfig  # noqa: F401
from .errors import BadRequest, ModelLoadError  # noqa: F401
from .scoring import LabelScore, TokenScore, load_scorer, score_labels  # noqa: F401
from .service import create_app  # noqa: F401
