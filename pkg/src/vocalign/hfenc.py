"""Adapters exposing Hugging Face BERT-family models through the
ContextualEncoder / PairClassifierEncoder interfaces.

transformers is an optional dependency (install the ``hf`` extra); the
locator loaders below keep model sources in configuration:

    mock[:DIMxLAYERS]   deterministic arithmetic fixture (no downloads)
    lexical             token-overlap pair baseline (no downloads)
    hf:PATH_OR_ID       contextual encoder over all hidden states
    hf-nsp:PATH_OR_ID   next-sentence-prediction pair classification head
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .crossenc import LexicalOverlapClassifier
from .embeddings import ArithmeticMockEncoder
from .errors import EncoderError

__all__ = [
    "HFContextualEncoder",
    "HFPairClassifier",
    "load_contextual_encoder",
    "load_pair_classifier",
]


def _require_torch_and_transformers():
    try:
        import torch
        import transformers
    except ImportError as e:
        raise EncoderError(
            "transformers is required for hf: locators (pip install 'vocalign[hf]')"
        ) from e
    return torch, transformers


class HFContextualEncoder:
    """All hidden states of a BERT-family model, aligned to the given
    subword tokens (internal [CLS]/[SEP] rows are stripped).

    num_layers counts every returned state — the embedding output plus
    one per transformer layer — so AVG_LAST4 pools the final four
    transformer layers, the usual BERT feature-extraction convention.
    """

    def __init__(self, path_or_id: str):
        torch, transformers = _require_torch_and_transformers()
        self._torch = torch
        self.tokenizer = transformers.AutoTokenizer.from_pretrained(path_or_id)
        self.model = transformers.AutoModel.from_pretrained(
            path_or_id, output_hidden_states=True
        )
        self.model.eval()
        self.num_layers = self.model.config.num_hidden_layers + 1
        self.hidden_dim = self.model.config.hidden_size
        self.name = path_or_id

    def tokenize(self, text: str) -> list[str]:
        return self.tokenizer.tokenize(text)

    def encode(self, tokens: Sequence[str]) -> np.ndarray:
        torch = self._torch
        ids = self.tokenizer.convert_tokens_to_ids(list(tokens))
        ids = [self.tokenizer.cls_token_id, *ids, self.tokenizer.sep_token_id]
        batch = torch.tensor([ids])
        with torch.no_grad():
            out = self.model(input_ids=batch, attention_mask=torch.ones_like(batch))
        stacked = torch.stack(out.hidden_states, dim=0)[:, 0, 1:-1, :]
        return stacked.numpy().astype(np.float64)


class HFPairClassifier:
    """Next-sentence-prediction head as a zero-shot pair scorer: the
    probability of the "continuation" class (NSP label 0) is returned
    as P(related)."""

    def __init__(self, path_or_id: str):
        torch, transformers = _require_torch_and_transformers()
        self._torch = torch
        self.tokenizer = transformers.AutoTokenizer.from_pretrained(path_or_id)
        self.model = transformers.BertForNextSentencePrediction.from_pretrained(path_or_id)
        self.model.eval()
        self.name = f"{path_or_id}(nsp)"

    def tokenize(self, text: str) -> list[str]:
        return self.tokenizer.tokenize(text)

    def classify_pair(self, tokens: Sequence[str], segment_ids: Sequence[int]) -> float:
        torch = self._torch
        ids = torch.tensor([self.tokenizer.convert_tokens_to_ids(list(tokens))])
        segs = torch.tensor([list(segment_ids)])
        with torch.no_grad():
            logits = self.model(
                input_ids=ids, token_type_ids=segs, attention_mask=torch.ones_like(ids)
            ).logits
            probs = torch.softmax(logits, dim=-1)
        return float(probs[0, 0])


def _parse_mock(locator: str) -> ArithmeticMockEncoder:
    if locator == "mock":
        return ArithmeticMockEncoder()
    shape = locator.split(":", 1)[1]
    try:
        dim_s, layers_s = shape.lower().split("x")
        return ArithmeticMockEncoder(hidden_dim=int(dim_s), num_layers=int(layers_s))
    except ValueError:
        raise EncoderError(f"bad mock locator {locator!r}; expected mock:DIMxLAYERS") from None


def load_contextual_encoder(locator: str):
    """Resolve a contextual-encoder locator (see module docstring)."""
    if locator == "mock" or locator.startswith("mock:"):
        return _parse_mock(locator)
    if locator.startswith("hf:"):
        return HFContextualEncoder(locator[3:])
    raise EncoderError(f"unknown contextual encoder locator {locator!r}")


def load_pair_classifier(locator: str):
    """Resolve a pair-classifier locator (see module docstring)."""
    if locator == "lexical":
        return LexicalOverlapClassifier()
    if locator.startswith("hf-nsp:"):
        return HFPairClassifier(locator[7:])
    raise EncoderError(f"unknown pair classifier locator {locator!r}")
