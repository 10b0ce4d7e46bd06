"""Per-author splits, training-sample generation and the block training loop.

Each block entry (record, target position) becomes 2*omega training samples:
one per co-author position p in full-name form plus an abbreviated duplicate
of each, never mixing the two forms inside a sample.  The second co-author j
is drawn uniformly at random and redrawn every ``reassign_interval`` epochs,
so the model cannot latch onto one fixed pairing.

Training runs mini-batch Adam on the weighted cross-entropy, stops when the
validation loss has not improved for ``patience`` consecutive epochs, and
returns the parameters of the best validation-accuracy epoch, not the last.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .blocking import Block, BlockEntry
from .encoders import Encoders
from .model import (
    AdamState,
    ModelConfig,
    ModelParams,
    adam_step,
    class_weights,
    forward_batch,
    init_adam_state,
    init_model,
    loss_and_gradients_batch,
)
from .names import name_forms, normalize_name
from .records import AuthorId, BibRecord

MODE_FULL = "FULL"
MODE_ANV = "ANV"


class TrainingError(Exception):
    pass


class Split(Enum):
    TRAIN = "TRAIN"
    VAL = "VAL"
    TEST = "TEST"


@dataclass
class SplitAssignment:
    """record_key -> split, kept per target author.

    The same record may sit in different splits for two different target
    authors; the split is a property of the (author, record) pair.
    """

    by_author: dict[AuthorId, dict[str, Split]]

    def split_of(self, author: AuthorId, record_key: str) -> Split:
        return self.by_author[author][record_key]

    def entries(self, block: Block, split: Split) -> list[BlockEntry]:
        return [
            e
            for e in block.entries
            if self.split_of(e.target.author_id, e.record.record_key) is split
        ]

    def counts(self) -> dict[Split, int]:
        out = {s: 0 for s in Split}
        for assignment in self.by_author.values():
            for split in assignment.values():
                out[split] += 1
        return out


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def derive_block_seeds(master_seed: int, variate_key: str) -> tuple[int, int]:
    """Stable (split_seed, train_seed) pair for one block under one master
    seed, so splitting and evaluation commands reconstruct exactly the
    partition training used without sharing state."""
    material = f"{master_seed}\x1f{variate_key.casefold()}".encode("utf-8")
    digest = hashlib.blake2b(material, digest_size=8).digest()
    seq = np.random.SeedSequence(int.from_bytes(digest, "little"))
    split_seq, train_seq = seq.spawn(2)
    return (
        int(split_seq.generate_state(1, np.uint32)[0]),
        int(train_seq.generate_state(1, np.uint32)[0]),
    )


def split_per_author(block: Block, seed: int) -> SplitAssignment:
    """Shuffle each author's records and cut 70/15/15 with train priority.

    TRAIN takes max(1, round(0.7n)); VAL takes round(0.15n) capped by what
    is left, but at least one record when two or more remain; TEST takes the
    rest.  Rounding is half-up.  Authors are processed in class order with
    one seeded generator, so the whole assignment is reproducible.
    """
    per_author: dict[AuthorId, list[str]] = {a: [] for a in block.authors}
    seen: set[tuple[AuthorId, str]] = set()
    for entry in block.entries:
        author = entry.target.author_id
        pair = (author, entry.record.record_key)
        if pair not in seen:
            seen.add(pair)
            per_author[author].append(entry.record.record_key)

    rng = np.random.default_rng(seed)
    by_author: dict[AuthorId, dict[str, Split]] = {}
    for author in block.authors:
        keys = per_author[author]
        n = len(keys)
        shuffled = [keys[i] for i in rng.permutation(n)]
        n_train = min(n, max(1, _round_half_up(0.7 * n)))
        remaining = n - n_train
        n_val = min(remaining, _round_half_up(0.15 * n))
        if n_val == 0 and remaining >= 2:
            n_val = 1
        assignment: dict[str, Split] = {}
        for i, key in enumerate(shuffled):
            if i < n_train:
                assignment[key] = Split.TRAIN
            elif i < n_train + n_val:
                assignment[key] = Split.VAL
            else:
                assignment[key] = Split.TEST
        by_author[author] = assignment
    return SplitAssignment(by_author)


@dataclass(frozen=True)
class TrainingSample:
    """One classifier input in string form: the target's first name, two
    co-author names, the record's title and source, and the class label."""

    target_first_name: str
    coauthor_p: str
    coauthor_j: str
    title: str
    source: str
    label: int
    variate_mode: str
    record_key: str


def generate_training_samples(
    record: BibRecord,
    target_position: int,
    class_index: dict[AuthorId, int],
    rng: np.random.Generator,
) -> list[TrainingSample]:
    """The 2*omega samples of one record: for every author position p a
    full-name sample plus an abbreviated twin sharing p and the random j.

    p runs over all omega positions, the target's own included; j is drawn
    uniformly over all positions and may coincide with p or the target.
    Solo-author records have no co-authors to pair, so both slots carry the
    empty sentinel and the record still yields its two samples.
    """
    mentions = record.authors
    omega = len(mentions)
    target = mentions[target_position]
    label = class_index[target.author_id]
    forms = [name_forms(normalize_name(m.display_name)) for m in mentions]
    tf = forms[target_position]

    samples: list[TrainingSample] = []
    if omega == 1:
        for mode, first in ((MODE_FULL, tf.full_first), (MODE_ANV, tf.anv_first)):
            samples.append(
                TrainingSample(first, "", "", record.title, record.source, label, mode, record.record_key)
            )
        return samples
    for p in range(omega):
        j = int(rng.integers(omega))
        samples.append(
            TrainingSample(
                tf.full_first, forms[p].full, forms[j].full,
                record.title, record.source, label, MODE_FULL, record.record_key,
            )
        )
        samples.append(
            TrainingSample(
                tf.anv_first, forms[p].anv, forms[j].anv,
                record.title, record.source, label, MODE_ANV, record.record_key,
            )
        )
    return samples


class SampleBank:
    """Vectorized cache of a sample list with redrawable j assignments.

    Row order and all static columns come from ``generate_training_samples``
    run over the entries in order; ``assign_coauthors`` reruns the generator
    with a fresh rng and only swaps the j half of x1.  Name vectors are
    encoded once into a shared matrix, so a reassignment is two fancy
    indexing operations rather than a re-encode.
    """

    def __init__(self, entries: Sequence[BlockEntry], class_index: dict[AuthorId, int], encoders: Encoders):
        self.entries = list(entries)
        self.class_index = class_index
        string_ids: dict[str, int] = {"": 0}
        rows_first: list[int] = []
        rows_p: list[int] = []
        labels: list[int] = []
        record_rows: dict[str, int] = {}
        rows_record: list[int] = []
        records: list[BibRecord] = []

        def intern(s: str) -> int:
            idx = string_ids.get(s)
            if idx is None:
                idx = len(string_ids)
                string_ids[s] = idx
            return idx

        structure_rng = np.random.default_rng(0)
        for entry in self.entries:
            samples = generate_training_samples(entry.record, entry.position, class_index, structure_rng)
            # register every possible j string so later redraws always hit
            for mention in entry.record.authors:
                f = name_forms(normalize_name(mention.display_name))
                intern(f.full)
                intern(f.anv)
            rec_row = record_rows.get(entry.record.record_key)
            if rec_row is None:
                rec_row = len(records)
                record_rows[entry.record.record_key] = rec_row
                records.append(entry.record)
            for s in samples:
                rows_first.append(intern(s.target_first_name))
                rows_p.append(intern(s.coauthor_p))
                labels.append(s.label)
                rows_record.append(rec_row)

        strings = list(string_ids)
        self._string_ids = string_ids
        self._vectors = np.stack([np.asarray(encoders.name(s)) for s in strings]) if strings else np.zeros((0, 1))
        self.name_dim = self._vectors.shape[1]
        text_rows = [
            0.5 * (np.asarray(encoders.text(r.title)) + np.asarray(encoders.text(r.source)))
            for r in records
        ]
        self.text_dim = len(text_rows[0]) if text_rows else 0
        self._first_ids = np.array(rows_first, dtype=np.intp)
        self._p_ids = np.array(rows_p, dtype=np.intp)
        self._j_ids = np.zeros(len(rows_first), dtype=np.intp)
        self.labels = np.array(labels, dtype=np.int64)
        self.x2 = np.stack(text_rows)[np.array(rows_record, dtype=np.intp)] if text_rows else np.zeros((0, 0))
        self.x1 = np.empty((len(rows_first), 2 * self.name_dim))
        self.x1[:, : self.name_dim] = self._vectors[self._first_ids]
        self._refresh_pair_half()

    @property
    def n_samples(self) -> int:
        return self.labels.size

    def assign_coauthors(self, rng: np.random.Generator) -> None:
        """Redraw every sample's j using ``rng``, entry by entry."""
        row = 0
        for entry in self.entries:
            samples = generate_training_samples(entry.record, entry.position, self.class_index, rng)
            for s in samples:
                self._j_ids[row] = self._string_ids[s.coauthor_j]
                row += 1
        self._refresh_pair_half()

    def _refresh_pair_half(self) -> None:
        if self.n_samples:
            self.x1[:, self.name_dim :] = 0.5 * (self._vectors[self._p_ids] + self._vectors[self._j_ids])


@dataclass(frozen=True)
class TrainRunConfig:
    max_epochs: int = 1000
    patience: int = 50
    reassign_interval: int = 10
    batch_size: int = 64
    learning_rate: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.max_epochs < 1 or self.patience < 1 or self.reassign_interval < 1 or self.batch_size < 1:
            raise ValueError("max_epochs, patience, reassign_interval and batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


class TrainingMonitor:
    """Early stopping on validation loss, checkpoint choice on accuracy.

    The two signals are deliberately independent: training halts once the
    loss has gone ``patience`` consecutive epochs without a strict
    improvement, while the kept parameters are those of the epoch with the
    highest accuracy seen so far.
    """

    def __init__(self, patience: int):
        self.patience = patience
        self.best_loss = math.inf
        self.best_accuracy = -math.inf
        self.best_epoch = 0
        self.since_improvement = 0

    def observe(self, epoch: int, val_loss: float, val_accuracy: float) -> bool:
        """Record one epoch; True when this epoch should be checkpointed."""
        if val_loss < self.best_loss:
            self.best_loss = val_loss
            self.since_improvement = 0
        else:
            self.since_improvement += 1
        improved = val_accuracy > self.best_accuracy
        if improved:
            self.best_accuracy = val_accuracy
            self.best_epoch = epoch
        return improved

    @property
    def should_stop(self) -> bool:
        return self.since_improvement >= self.patience


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    val_loss: float
    val_accuracy: float
    checkpointed: bool


@dataclass
class TrainResult:
    best_params: ModelParams
    final_params: ModelParams
    best_adam_state: AdamState
    final_adam_state: AdamState
    best_epoch: int
    history: list[EpochStats]
    stopped_early: bool
    val_on_train: bool
    class_counts: np.ndarray


def history_lines(history: Iterable[EpochStats]) -> list[str]:
    return [
        json.dumps(
            {
                "epoch": h.epoch,
                "train_loss": h.train_loss,
                "val_loss": h.val_loss,
                "val_accuracy": h.val_accuracy,
                "checkpointed": h.checkpointed,
            }
        )
        for h in history
    ]


def _evaluate_bank(params: ModelParams, bank: SampleBank, batch_size: int = 1024) -> tuple[float, float]:
    """Unweighted mean cross-entropy and argmax accuracy over a frozen bank."""
    total_loss = 0.0
    total_correct = 0
    n = bank.n_samples
    for start in range(0, n, batch_size):
        stop = min(start + batch_size, n)
        probs, _ = forward_batch(params, bank.x1[start:stop], bank.x2[start:stop], mode="infer")
        labels = bank.labels[start:stop]
        p_true = probs[np.arange(stop - start), labels]
        total_loss += float(-np.log(np.maximum(p_true, 1e-12)).sum())
        total_correct += int((probs.argmax(axis=1) == labels).sum())
    return total_loss / n, total_correct / n


def _copy_adam(state: AdamState) -> AdamState:
    return AdamState(
        t=state.t, lr=state.lr, beta1=state.beta1, beta2=state.beta2, eps=state.eps,
        m=state.m.copy(), v=state.v.copy(),
    )


def train_block_model(
    block: Block,
    split: SplitAssignment,
    encoders: Encoders,
    config: TrainRunConfig | None = None,
    model_config: ModelConfig | None = None,
) -> TrainResult:
    """Train one block's classifier to convergence and return the best state.

    All randomness (weight init, j draws, batch shuffles, dropout) derives
    from ``config.seed`` through split substreams, so a rerun with the same
    inputs reproduces the trajectory exactly; a caller-supplied
    ``model_config`` contributes its topology but not its seed.  Blocks
    without validation records fall back to scoring the training bank for
    the stopping signal, flagged in the result.
    """
    config = config or TrainRunConfig()
    train_entries = split.entries(block, Split.TRAIN)
    val_entries = split.entries(block, Split.VAL)
    if not train_entries:
        raise TrainingError(f"block {block.display_variate!r} has no TRAIN records")

    seed_root = np.random.SeedSequence(config.seed)
    init_seq, assign_seq, val_seq, shuffle_seq, dropout_seq = seed_root.spawn(5)
    assign_rng = np.random.default_rng(assign_seq)
    shuffle_rng = np.random.default_rng(shuffle_seq)
    dropout_rng = np.random.default_rng(dropout_seq)

    bank = SampleBank(train_entries, block.class_index, encoders)
    counts = np.bincount(bank.labels, minlength=block.n_classes)
    if (counts == 0).any():
        missing = [block.authors[i].render() for i in np.flatnonzero(counts == 0)]
        raise TrainingError(f"classes without TRAIN samples: {', '.join(missing)}")
    weights = class_weights(counts)
    sample_weights = weights[bank.labels]

    val_on_train = not val_entries
    if val_on_train:
        val_bank = bank
    else:
        val_bank = SampleBank(val_entries, block.class_index, encoders)
        val_bank.assign_coauthors(np.random.default_rng(val_seq))

    init_seed = int(init_seq.generate_state(1, dtype=np.uint32)[0])
    if model_config is None:
        model_config = ModelConfig(
            n_classes=block.n_classes,
            input1_dim=2 * bank.name_dim,
            input2_dim=bank.text_dim,
            seed=init_seed,
        )
    else:
        model_config = replace(model_config, n_classes=block.n_classes, seed=init_seed)
    if model_config.input1_dim != 2 * bank.name_dim or model_config.input2_dim != bank.text_dim:
        raise TrainingError(
            f"model dims {model_config.input1_dim}/{model_config.input2_dim} do not match "
            f"encoder dims {2 * bank.name_dim}/{bank.text_dim}"
        )

    params = init_model(model_config)
    adam = init_adam_state(params, lr=config.learning_rate)
    monitor = TrainingMonitor(config.patience)
    history: list[EpochStats] = []
    best_params = params.copy()
    best_adam = _copy_adam(adam)
    stopped_early = False
    n = bank.n_samples

    for epoch in range(1, config.max_epochs + 1):
        if (epoch - 1) % config.reassign_interval == 0:
            bank.assign_coauthors(assign_rng)
        perm = shuffle_rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            loss, grad = loss_and_gradients_batch(
                params, bank.x1[idx], bank.x2[idx], bank.labels[idx], sample_weights[idx],
                mode="train", rng=dropout_rng,
            )
            if not math.isfinite(loss):
                raise TrainingError(f"non-finite training loss at epoch {epoch}")
            adam_step(params, grad, adam)
            epoch_loss += loss * idx.size
        val_loss, val_accuracy = _evaluate_bank(params, val_bank)
        checkpointed = monitor.observe(epoch, val_loss, val_accuracy)
        if checkpointed:
            best_params = params.copy()
            best_adam = _copy_adam(adam)
        history.append(EpochStats(epoch, epoch_loss / n, val_loss, val_accuracy, checkpointed))
        if monitor.should_stop:
            stopped_early = True
            break

    return TrainResult(
        best_params=best_params,
        final_params=params,
        best_adam_state=best_adam,
        final_adam_state=adam,
        best_epoch=monitor.best_epoch,
        history=history,
        stopped_early=stopped_early,
        val_on_train=val_on_train,
        class_counts=counts,
    )
