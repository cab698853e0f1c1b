"""Twin-tower similarity model, its training loop, and checkpointing.

One parameter set is applied to both strings of a pair: token ids →
embedding → single-layer Bi-LSTM → pooling (final-state concatenation,
or masked additive attention when configured) → dense ReLU → dense
linear. The pair's similarity is exp(-L1 distance) between the two
tower outputs, which lands in (0,1] and equals 1.0 exactly when both
sides are the same token sequence.

Training minimizes binary cross-entropy (or mean squared error) between
that score and the 0/1 synonymy label with Adam. Runs are reproducible:
initialization is seeded, the per-epoch shuffle is reseeded from
(seed, epoch) so resumed runs see the same batch order, and the loop
pins torch to one thread for its duration.
"""

from __future__ import annotations

import hashlib
import json
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import torch
from torch import nn
from torch.nn.utils.rnn import pack_padded_sequence, pad_packed_sequence

from .atoms import AtomStore
from .embeddings import EmbeddingTable
from .errors import ConfigError, TrainingError
from .metrics import confusion, metrics as compute_metrics
from .pairs import LabeledPair

__all__ = [
    "PAD_ID",
    "OOV_ID",
    "SiameseConfig",
    "SiameseModel",
    "TrainReport",
    "build",
    "similarity",
    "train",
    "predict",
    "model_checksum",
    "config_hash",
    "save_checkpoint",
    "load_checkpoint",
]

PAD_ID = 0
OOV_ID = 1
CHECKPOINT_FORMAT = "vocalign-siamese-v1"
_EPS = 1e-7

Tokenizer = Callable[[str], list[str]]


@dataclass(frozen=True)
class SiameseConfig:
    embed_dim: int
    lstm_hidden: int = 50
    dense1_units: int = 128
    dense2_units: int = 50
    use_attention: bool = False
    max_tokens: int = 30
    learning_rate: float = 0.001
    batch_size: int = 8192
    epochs: int = 100
    threshold: float = 0.5
    seed: int = 0
    trainable_embeddings: bool = True
    loss: str = "bce"

    def __post_init__(self):
        for name in ("embed_dim", "lstm_hidden", "dense1_units", "dense2_units",
                     "max_tokens", "batch_size", "epochs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not (0.0 < self.threshold < 1.0):
            raise ConfigError(f"threshold must be in (0,1), got {self.threshold}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.loss not in ("bce", "mse"):
            raise ConfigError(f"loss must be 'bce' or 'mse', got {self.loss!r}")


#: Fields that may differ between a checkpoint and a resuming run: the epoch
#: target only moves the stopping point, and the decision threshold is an
#: evaluation-time knob.  Everything else changes the architecture or the
#: optimization trajectory and makes checkpoints incompatible.
_HASH_EXEMPT = ("epochs", "threshold")


def config_hash(config: SiameseConfig) -> str:
    payload = {k: v for k, v in asdict(config).items() if k not in _HASH_EXEMPT}
    return hashlib.sha256(
        json.dumps(payload, sort_keys=True).encode("utf-8")
    ).hexdigest()


class _AdditiveAttention(nn.Module):
    """Masked additive self-attention pooling over the Bi-LSTM outputs."""

    def __init__(self, input_dim: int):
        super().__init__()
        self.proj = nn.Linear(input_dim, input_dim)
        self.score = nn.Linear(input_dim, 1, bias=False)

    def forward(self, seq: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        # seq: (B, T, D); mask: (B, T) with 1 on real positions
        energy = self.score(torch.tanh(self.proj(seq))).squeeze(-1)
        energy = energy.masked_fill(mask == 0, float("-inf"))
        weights = torch.softmax(energy, dim=1)
        return torch.bmm(weights.unsqueeze(1), seq).squeeze(1)


class SiameseModel(nn.Module):
    """Shared-weight tower; vocabulary rows are [pad, oov, *tokens]."""

    def __init__(
        self,
        config: SiameseConfig,
        vocab: Sequence[str],
        tokenizer: Tokenizer,
        init_matrix: np.ndarray | None = None,
        tokenizer_id: str = "word",
    ):
        super().__init__()
        self.config = config
        self.vocab = list(vocab)
        self.tokenizer = tokenizer
        self.tokenizer_id = tokenizer_id
        self.token_to_id = {t: i + 2 for i, t in enumerate(self.vocab)}
        torch.manual_seed(config.seed)
        self.embedding = nn.Embedding(
            len(self.vocab) + 2, config.embed_dim, padding_idx=PAD_ID
        )
        if init_matrix is not None:
            if init_matrix.shape != (len(self.vocab) + 2, config.embed_dim):
                raise ConfigError(
                    f"init matrix shape {init_matrix.shape} does not match "
                    f"({len(self.vocab) + 2}, {config.embed_dim})"
                )
            with torch.no_grad():
                self.embedding.weight.copy_(torch.from_numpy(init_matrix).float())
        else:
            with torch.no_grad():
                self.embedding.weight[PAD_ID].zero_()
        self.embedding.weight.requires_grad = config.trainable_embeddings
        self.lstm = nn.LSTM(
            config.embed_dim, config.lstm_hidden, batch_first=True, bidirectional=True
        )
        pooled_dim = 2 * config.lstm_hidden
        self.attention = _AdditiveAttention(pooled_dim) if config.use_attention else None
        self.dense1 = nn.Linear(pooled_dim, config.dense1_units)
        self.dense2 = nn.Linear(config.dense1_units, config.dense2_units)

    def token_ids(self, text: str) -> tuple[list[int], int]:
        """(fixed-length id list, true length); empty input occupies one
        pad slot so the recurrent encoder always sees a step."""
        tokens = self.tokenizer(text)[: self.config.max_tokens]
        ids = [self.token_to_id.get(t, OOV_ID) for t in tokens]
        length = max(1, len(ids))
        ids += [PAD_ID] * (self.config.max_tokens - len(ids))
        return ids, length

    def tower(self, ids: torch.Tensor, lengths: torch.Tensor) -> torch.Tensor:
        emb = self.embedding(ids)
        packed = pack_padded_sequence(
            emb, lengths.cpu(), batch_first=True, enforce_sorted=False
        )
        out, (h, _) = self.lstm(packed)
        if self.attention is not None:
            seq, _ = pad_packed_sequence(
                out, batch_first=True, total_length=ids.shape[1]
            )
            positions = torch.arange(ids.shape[1], device=ids.device)
            mask = (positions.unsqueeze(0) < lengths.unsqueeze(1)).to(seq.dtype)
            pooled = self.attention(seq, mask)
        else:
            pooled = torch.cat([h[0], h[1]], dim=1)
        return self.dense2(torch.relu(self.dense1(pooled)))

    def forward(self, ids_a, len_a, ids_b, len_b) -> torch.Tensor:
        xa = self.tower(ids_a, len_a)
        xb = self.tower(ids_b, len_b)
        return torch.exp(-(xa - xb).abs().sum(dim=1))


def build(
    config: SiameseConfig,
    table: EmbeddingTable,
    tokenizer: Tokenizer,
    tokenizer_id: str = "word",
) -> SiameseModel:
    """Model with the embedding layer initialized from the table:
    row 0 = pad (zeros, frozen), row 1 = oov vector, then sorted tokens."""
    if table.dim != config.embed_dim:
        raise ConfigError(
            f"embedding table dim {table.dim} != config embed_dim {config.embed_dim}"
        )
    vocab = table.tokens()
    matrix = np.zeros((len(vocab) + 2, table.dim), dtype=np.float64)
    matrix[OOV_ID] = table.oov_vector
    for i, token in enumerate(vocab):
        matrix[i + 2] = table.entries[token]
    return SiameseModel(config, vocab, tokenizer, init_matrix=matrix, tokenizer_id=tokenizer_id)


def _ids_tensor(model: SiameseModel, token_seqs: Sequence[Sequence[str]]):
    max_tokens = model.config.max_tokens
    ids = torch.full((len(token_seqs), max_tokens), PAD_ID, dtype=torch.long)
    lengths = torch.ones(len(token_seqs), dtype=torch.long)
    for row, tokens in enumerate(token_seqs):
        tokens = list(tokens)[:max_tokens]
        for col, token in enumerate(tokens):
            ids[row, col] = model.token_to_id.get(token, OOV_ID)
        lengths[row] = max(1, len(tokens))
    return ids, lengths


def similarity(model: SiameseModel, a_tokens: Sequence[str], b_tokens: Sequence[str]) -> float:
    """exp(-L1) similarity of one token-sequence pair, in (0,1]."""
    model.eval()
    with torch.no_grad():
        ids_a, len_a = _ids_tensor(model, [a_tokens])
        ids_b, len_b = _ids_tensor(model, [b_tokens])
        return float(model(ids_a, len_a, ids_b, len_b)[0])


def encode_pairs(model: SiameseModel, pairs: Sequence[LabeledPair], store: AtomStore):
    """Tensors (ids_a, len_a, ids_b, len_b, labels) in the given pair order."""
    rows_a, rows_b, labels = [], [], []
    for pair in pairs:
        rows_a.append(model.tokenizer(store.get(pair.a).string))
        rows_b.append(model.tokenizer(store.get(pair.b).string))
        labels.append(pair.label)
    ids_a, len_a = _ids_tensor(model, rows_a)
    ids_b, len_b = _ids_tensor(model, rows_b)
    return ids_a, len_a, ids_b, len_b, torch.tensor(labels, dtype=torch.float32)


def _batch_scores(model, ids_a, len_a, ids_b, len_b, batch_size=4096) -> torch.Tensor:
    chunks = []
    for start in range(0, ids_a.shape[0], batch_size):
        sl = slice(start, start + batch_size)
        chunks.append(model(ids_a[sl], len_a[sl], ids_b[sl], len_b[sl]))
    return torch.cat(chunks)


def predict(
    model: SiameseModel,
    pairs: Sequence[LabeledPair],
    store: AtomStore,
    threshold: float | None = None,
) -> tuple[list[float], list[int]]:
    """Scores and thresholded labels (1 iff score >= threshold), aligned
    with the input pair order."""
    if threshold is None:
        threshold = model.config.threshold
    model.eval()
    with torch.no_grad():
        ids_a, len_a, ids_b, len_b, _ = encode_pairs(model, pairs, store)
        scores = _batch_scores(model, ids_a, len_a, ids_b, len_b).tolist()
    return scores, [1 if s >= threshold else 0 for s in scores]


@dataclass
class TrainReport:
    losses: list[float]
    val_metrics: list[dict]
    wall_time: float
    weights_checksum: str
    epochs_done: int = 0

    def __post_init__(self):
        if self.epochs_done == 0:
            self.epochs_done = len(self.losses)


def model_checksum(model: SiameseModel) -> str:
    digest = hashlib.sha256()
    for name, param in sorted(model.state_dict().items()):
        digest.update(name.encode("utf-8"))
        digest.update(param.detach().cpu().contiguous().numpy().tobytes())
    return digest.hexdigest()


@contextmanager
def _single_thread():
    prev = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        yield
    finally:
        torch.set_num_threads(prev)


def save_checkpoint(
    model: SiameseModel,
    path,
    optimizer: torch.optim.Optimizer | None = None,
    epochs_done: int = 0,
    loss_history: list[float] | None = None,
    val_history: list[dict] | None = None,
) -> None:
    payload = {
        "format": CHECKPOINT_FORMAT,
        "config": asdict(model.config),
        "config_sha256": config_hash(model.config),
        "tokenizer_id": model.tokenizer_id,
        "vocab": model.vocab,
        "model_state": model.state_dict(),
        "optimizer_state": optimizer.state_dict() if optimizer is not None else None,
        "epochs_done": epochs_done,
        "loss_history": list(loss_history or []),
        "val_history": list(val_history or []),
    }
    torch.save(payload, path)


def load_checkpoint(path, tokenizer: Tokenizer, expect_config: SiameseConfig | None = None):
    """Rebuild (model, payload). Refuses a checkpoint whose stored config
    hash disagrees with expect_config."""
    payload = torch.load(path, weights_only=True)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise TrainingError(f"unrecognized checkpoint format in {path}")
    stored = SiameseConfig(**payload["config"])
    if expect_config is not None and config_hash(expect_config) != payload["config_sha256"]:
        raise TrainingError(
            "checkpoint config hash mismatch: refusing to resume with a different configuration"
        )
    model = SiameseModel(
        stored, payload["vocab"], tokenizer, tokenizer_id=payload["tokenizer_id"]
    )
    model.load_state_dict(payload["model_state"])
    model.embedding.weight.requires_grad = stored.trainable_embeddings
    return model, payload


def _loss_fn(scores: torch.Tensor, labels: torch.Tensor, kind: str) -> torch.Tensor:
    if kind == "mse":
        return ((scores - labels) ** 2).mean()
    s = scores.clamp(_EPS, 1.0 - _EPS)
    return -(labels * torch.log(s) + (1.0 - labels) * torch.log(1.0 - s)).mean()


def train(
    model: SiameseModel,
    train_pairs: Sequence[LabeledPair],
    valid_pairs: Sequence[LabeledPair],
    store: AtomStore,
    config: SiameseConfig | None = None,
    checkpoint: str | Path | None = None,
    resume: bool = False,
) -> TrainReport:
    """Run (or resume) the training loop; deterministic for a fixed seed.

    With a checkpoint path, state is saved after every epoch; resume=True
    reloads optimizer state and epoch count from it and continues to
    config.epochs. Each epoch shuffles with a generator seeded from
    (config.seed, epoch), so a resumed run sees exactly the batches a
    straight run would.
    """
    config = config or model.config
    if config_hash(config) != config_hash(model.config):
        raise TrainingError("train() config does not match the model's configuration")
    labels_present = {p.label for p in train_pairs}
    if labels_present != {0, 1}:
        raise TrainingError(
            f"training set must contain both labels, got {sorted(labels_present)}"
        )

    train_sorted = sorted(train_pairs)
    valid_sorted = sorted(valid_pairs)
    ids_a, len_a, ids_b, len_b, labels = encode_pairs(model, train_sorted, store)
    optimizer = torch.optim.Adam(
        (p for p in model.parameters() if p.requires_grad), lr=config.learning_rate
    )
    start_epoch = 0
    loss_history: list[float] = []
    val_history: list[dict] = []
    if resume:
        if checkpoint is None or not Path(checkpoint).exists():
            raise TrainingError("resume requested but no checkpoint file exists")
        _, payload = load_checkpoint(checkpoint, model.tokenizer, expect_config=config)
        if payload["vocab"] != model.vocab or payload["tokenizer_id"] != model.tokenizer_id:
            raise TrainingError(
                "checkpoint vocabulary does not match the current embedding table "
                f"({len(payload['vocab'])} vs {len(model.vocab)} tokens, tokenizer "
                f"{payload['tokenizer_id']!r} vs {model.tokenizer_id!r}); resuming "
                "requires the same vectors the checkpoint was trained with"
            )
        model.load_state_dict(payload["model_state"])
        if payload["optimizer_state"] is not None:
            optimizer.load_state_dict(payload["optimizer_state"])
        start_epoch = payload["epochs_done"]
        loss_history = list(payload["loss_history"])
        val_history = list(payload["val_history"])

    n = len(train_sorted)
    started = time.perf_counter()
    with _single_thread():
        for epoch in range(start_epoch, config.epochs):
            model.train()
            gen = torch.Generator()
            gen.manual_seed(config.seed * 1_000_003 + epoch)
            order = torch.randperm(n, generator=gen)
            epoch_loss = 0.0
            for start in range(0, n, config.batch_size):
                idx = order[start : start + config.batch_size]
                optimizer.zero_grad()
                scores = model(ids_a[idx], len_a[idx], ids_b[idx], len_b[idx])
                loss = _loss_fn(scores, labels[idx], config.loss)
                if not torch.isfinite(loss):
                    raise TrainingError(
                        f"non-finite loss {loss.item()} at epoch {epoch}, "
                        f"batch starting at {start}"
                    )
                loss.backward()
                optimizer.step()
                epoch_loss += float(loss.item()) * len(idx) / n
            loss_history.append(epoch_loss)
            if valid_sorted:
                scores, _ = predict(model, valid_sorted, store, config.threshold)
                row = compute_metrics(
                    confusion(scores, [p.label for p in valid_sorted], config.threshold),
                    threshold=config.threshold,
                )
                val_history.append(
                    {
                        "epoch": epoch,
                        "accuracy": row.accuracy,
                        "precision": row.precision,
                        "recall": row.recall,
                        "f1": row.f1,
                    }
                )
            if checkpoint is not None:
                save_checkpoint(
                    model,
                    checkpoint,
                    optimizer=optimizer,
                    epochs_done=epoch + 1,
                    loss_history=loss_history,
                    val_history=val_history,
                )
    return TrainReport(
        losses=loss_history,
        val_metrics=val_history,
        wall_time=time.perf_counter() - started,
        weights_checksum=model_checksum(model),
        epochs_done=len(loss_history),
    )
