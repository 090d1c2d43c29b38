"""One-round shuffle model execution.

A local randomizer is any callable ``randomizer(x, rng) -> Messages``. A
randomizer may also define ``randomize_many(inputs, rng) -> (Messages,
counts)`` to process a run of parties in one call; ``counts[j]`` is the number
of messages emitted by the ``j``-th party. The shuffler hands the analyzer a
:class:`MessageBag`, a canonical multiset with no order and no sender
identity, so analyzer output depends on the multiset alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable, NamedTuple, Optional, Sequence

import numpy as np


class Message(NamedTuple):
    tag: int
    value: int


@dataclass(frozen=True)
class Messages:
    """A batch of messages as parallel ``tags`` / ``values`` arrays."""

    tags: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.tags.shape != self.values.shape or self.tags.ndim != 1:
            raise ValueError("tags and values must be 1-D arrays of equal length")

    @classmethod
    def empty(cls) -> "Messages":
        return cls(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64))

    @classmethod
    def from_list(cls, msgs: Sequence[Message]) -> "Messages":
        if not msgs:
            return cls.empty()
        arr = np.asarray(msgs, dtype=np.int64).reshape(-1, 2)
        return cls(arr[:, 0].copy(), arr[:, 1].copy())

    @classmethod
    def concat(cls, parts: Sequence["Messages"]) -> "Messages":
        if not parts:
            return cls.empty()
        return cls(
            np.concatenate([p.tags for p in parts]).astype(np.int64, copy=False),
            np.concatenate([p.values for p in parts]).astype(np.int64, copy=False),
        )

    def __len__(self) -> int:
        return len(self.tags)

    def to_list(self) -> list[Message]:
        return [Message(int(t), int(v)) for t, v in zip(self.tags, self.values)]


class MessageBag:
    """Multiset of messages stored sorted by ``(tag, value)``."""

    __slots__ = ("tags", "values")

    def __init__(self, messages: Optional[Messages] = None):
        if messages is None:
            messages = Messages.empty()
        tags = np.asarray(messages.tags, dtype=np.int64)
        values = np.asarray(messages.values, dtype=np.int64)
        if len(tags) and 0 <= tags.min() and tags.max() < 2**31 and 0 <= values.min() and values.max() < 2**31:
            # one packed int64 sort is much faster than lexsort
            key = np.sort((tags << 31) | values)
            tags, values = key >> 31, key & (2**31 - 1)
        else:
            order = np.lexsort((values, tags))
            tags, values = tags[order], values[order]
        self.tags = np.ascontiguousarray(tags)
        self.values = np.ascontiguousarray(values)
        self.tags.flags.writeable = False
        self.values.flags.writeable = False

    def __len__(self) -> int:
        return len(self.tags)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MessageBag):
            return NotImplemented
        return np.array_equal(self.tags, other.tags) and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.tags.tobytes(), self.values.tobytes()))

    def __repr__(self):
        return f"MessageBag({len(self)} messages)"

    def triples(self) -> list[tuple[int, int, int]]:
        """``(tag, value, multiplicity)`` for each distinct message, in canonical order."""
        if not len(self):
            return []
        pairs = np.stack([self.tags, self.values], axis=1)
        uniq, counts = np.unique(pairs, axis=0, return_counts=True)
        return [(int(t), int(v), int(c)) for (t, v), c in zip(uniq, counts)]

    def contains(self, other: "MessageBag") -> bool:
        """Multiset inclusion ``other <= self``."""
        mine = {(t, v): c for t, v, c in self.triples()}
        return all(mine.get((t, v), 0) >= c for t, v, c in other.triples())

    def select(self, tag: int) -> "MessageBag":
        lo, hi = np.searchsorted(self.tags, [tag, tag + 1])
        return MessageBag(Messages(self.tags[lo:hi], self.values[lo:hi]))


def shuffle(parts: Sequence[Messages]) -> MessageBag:
    """The trusted shuffler: forget senders and order."""
    return MessageBag(Messages.concat(list(parts)))


@dataclass
class PartyStatus:
    honest: np.ndarray

    def __post_init__(self):
        self.honest = np.asarray(self.honest, dtype=bool)

    @classmethod
    def all_honest(cls, n: int) -> "PartyStatus":
        return cls(np.ones(n, dtype=bool))

    @classmethod
    def drop_random(cls, n: int, n_dropped: int, rng: np.random.Generator) -> "PartyStatus":
        honest = np.ones(n, dtype=bool)
        honest[rng.choice(n, size=n_dropped, replace=False)] = False
        return cls(honest)

    def __len__(self) -> int:
        return len(self.honest)

    @property
    def honest_fraction(self) -> float:
        return float(self.honest.mean()) if len(self.honest) else 0.0


@dataclass
class ExecutionTranscript:
    """Arrival-ordered message log with the state boundaries of one execution.

    State ``t`` is the multiset of the first ``boundaries[t]`` logged messages.
    Only :meth:`state` is the adversary's view; the log order is internal.
    """

    log: Messages
    boundaries: list[int]
    owners: np.ndarray
    labels: list[str] = field(default_factory=list)
    output: Any = None
    flags: list[str] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.boundaries)

    def state(self, t: int) -> MessageBag:
        end = self.boundaries[t]
        return MessageBag(Messages(self.log.tags[:end], self.log.values[:end]))

    @property
    def final(self) -> MessageBag:
        return self.state(len(self.boundaries) - 1)

    def parties_in_state(self, t: int) -> np.ndarray:
        """Indices of parties whose messages are contained in state ``t``."""
        return np.unique(self.owners[: self.boundaries[t]])

    def export_jsonl(self, path, steps: Optional[Sequence[int]] = None) -> None:
        """Write one JSON line per state: ``{"step", "label", "messages": [[tag, value, mult], ...]}``."""
        if steps is None:
            steps = range(len(self.boundaries))
        with open(path, "w", encoding="utf-8") as fh:
            for t in steps:
                row = {
                    "step": int(t),
                    "label": self.labels[t] if t < len(self.labels) else "",
                    "messages": [list(trip) for trip in self.state(t).triples()],
                }
                fh.write(json.dumps(row, separators=(",", ":")) + "\n")


def load_transcript_states(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _index(inputs, start: int, stop: int):
    try:
        return inputs[start:stop]
    except TypeError:
        return [inputs[j] for j in range(start, stop)]


def _randomize(randomizers, inputs, parties: np.ndarray, rng) -> tuple[Messages, np.ndarray]:
    """Apply each listed party's randomizer, batching consecutive runs that share one."""
    chunks: list[Messages] = []
    counts: list[np.ndarray] = []
    j = 0
    while j < len(parties):
        R = randomizers[parties[j]]
        many = getattr(R, "randomize_many", None)
        stop = j + 1
        if many is not None:
            while (
                stop < len(parties)
                and randomizers[parties[stop]] is R
                and parties[stop] == parties[stop - 1] + 1
            ):
                stop += 1
        if many is not None and stop - j > 1:
            msgs, cnt = many(_index(inputs, int(parties[j]), int(parties[stop - 1]) + 1), rng)
            chunks.append(msgs)
            counts.append(np.asarray(cnt, dtype=np.int64))
        else:
            msgs = R(inputs[int(parties[j])], rng)
            if not isinstance(msgs, Messages):
                msgs = Messages.from_list(list(msgs))
            chunks.append(msgs)
            counts.append(np.array([len(msgs)], dtype=np.int64))
        j = stop
    if not chunks:
        return Messages.empty(), np.empty(0, dtype=np.int64)
    return Messages.concat(chunks), np.concatenate(counts)


def _check_lengths(randomizers, inputs, status: Optional[PartyStatus]) -> int:
    n = len(randomizers)
    if len(inputs) != n:
        raise ValueError(f"{n} randomizers but {len(inputs)} inputs")
    if status is not None and len(status) != n:
        raise ValueError(f"{n} randomizers but status for {len(status)} parties")
    return n


def run_round(
    randomizers: Sequence[Callable],
    inputs,
    status: Optional[PartyStatus],
    analyzer: Callable[[MessageBag], Any],
    rng: np.random.Generator,
) -> tuple[Any, ExecutionTranscript]:
    """``A(S(R_1(x_1), ..., R_n(x_n)))`` with malicious parties sending nothing."""
    n = _check_lengths(randomizers, inputs, status)
    if status is None:
        status = PartyStatus.all_honest(n)
    parties = np.flatnonzero(status.honest)
    log, counts = _randomize(randomizers, inputs, parties, rng)
    transcript = ExecutionTranscript(
        log=log,
        boundaries=[len(log)],
        owners=np.repeat(parties, counts),
        labels=["final"],
        meta={"n": n, "honest_fraction": status.honest_fraction},
    )
    bag = transcript.final
    if not len(bag):
        transcript.flags.append("empty_bag")
    transcript.output = analyzer(bag)
    return transcript.output, transcript


@dataclass(frozen=True)
class Schedule:
    """Party order for an incremental run: ``prefix`` parties, then ``online`` one at a time, then ``suffix``."""

    prefix: int
    online: int
    suffix: int

    @property
    def total(self) -> int:
        return self.prefix + self.online + self.suffix


def run_incremental(
    randomizers: Sequence[Callable],
    inputs,
    schedule: Schedule,
    analyzer: Callable[[MessageBag], Any],
    rng: np.random.Generator,
    status: Optional[PartyStatus] = None,
) -> tuple[Any, ExecutionTranscript]:
    """Incremental execution recording ``s_0`` (after the prefix), ``s_1..s_online`` and ``s_final``."""
    n = _check_lengths(randomizers, inputs, status)
    if min(schedule.prefix, schedule.online, schedule.suffix) < 0 or schedule.total != n:
        raise ValueError(f"schedule {schedule} does not partition {n} parties")
    if status is None:
        status = PartyStatus.all_honest(n)
    honest = status.honest
    parties = np.arange(n)
    p0, p1 = schedule.prefix, schedule.prefix + schedule.online

    pre = parties[:p0][honest[:p0]]
    log_pre, cnt_pre = _randomize(randomizers, inputs, pre, rng)

    online = parties[p0:p1]
    on_honest = online[honest[p0:p1]]
    log_on, cnt_on_honest = _randomize(randomizers, inputs, on_honest, rng)
    cnt_on = np.zeros(len(online), dtype=np.int64)
    cnt_on[honest[p0:p1]] = cnt_on_honest

    post = parties[p1:][honest[p1:]]
    log_post, cnt_post = _randomize(randomizers, inputs, post, rng)

    boundaries = [len(log_pre)]
    boundaries.extend((len(log_pre) + np.cumsum(cnt_on)).tolist())
    boundaries.append(len(log_pre) + len(log_on) + len(log_post))
    labels = ["prefix"] + [f"online:{i + 1}" for i in range(len(online))] + ["final"]
    owners = np.concatenate(
        [np.repeat(pre, cnt_pre), np.repeat(on_honest, cnt_on_honest), np.repeat(post, cnt_post)]
    )
    transcript = ExecutionTranscript(
        log=Messages.concat([log_pre, log_on, log_post]),
        boundaries=boundaries,
        owners=owners,
        labels=labels,
        meta={"n": n, "schedule": schedule, "honest_fraction": status.honest_fraction},
    )
    bag = transcript.final
    if not len(bag):
        transcript.flags.append("empty_bag")
    transcript.output = analyzer(bag)
    return transcript.output, transcript
