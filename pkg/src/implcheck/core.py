"""Message alphabets, words, and the homomorphisms between them.

Synchronous events ``p->q:m`` describe a message exchange from a global
point of view.  Asynchronous events are the local halves: ``p|>q!m`` (p
sends m to q) and ``q<|p?m`` (q receives m from p).  Words are plain
tuples so they can be hashed, sliced and shared freely.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple, Union

__all__ = [
    "Kind",
    "SyncEvent",
    "AsyncEvent",
    "SyncWord",
    "AsyncWord",
    "NotInImage",
    "split_word",
    "unsplit_word",
    "project",
    "channel_values",
    "is_channel_compliant",
    "parse_sync_event",
    "parse_async_event",
    "parse_async_word",
    "render_word",
]

_IDENT = r"[A-Za-z0-9_.#$]+"
_SYNC_RE = re.compile(rf"^({_IDENT})->({_IDENT}):({_IDENT})$")
_ASYNC_RE = re.compile(rf"^({_IDENT})(\|>|<\|)({_IDENT})([!?])({_IDENT})$")


class NotInImage(ValueError):
    """Raised when an asynchronous word is not the split of a synchronous one."""


class Kind(enum.Enum):
    SEND = "!"
    RECEIVE = "?"


@dataclass(frozen=True, order=True)
class SyncEvent:
    sender: str
    receiver: str
    value: str

    def __post_init__(self) -> None:
        if not self.sender or not self.receiver:
            raise ValueError("participant names must be non-empty")
        if self.sender == self.receiver:
            raise ValueError(f"sender and receiver coincide in {self}")

    def involves(self, participant: str) -> bool:
        return participant == self.sender or participant == self.receiver

    @property
    def send(self) -> "AsyncEvent":
        return AsyncEvent(Kind.SEND, self.sender, self.receiver, self.value)

    @property
    def receive(self) -> "AsyncEvent":
        return AsyncEvent(Kind.RECEIVE, self.receiver, self.sender, self.value)

    def __str__(self) -> str:
        return f"{self.sender}->{self.receiver}:{self.value}"


@dataclass(frozen=True)
class AsyncEvent:
    kind: Kind
    owner: str
    peer: str
    value: str

    def __post_init__(self) -> None:
        if self.owner == self.peer:
            raise ValueError(f"owner and peer coincide in {self}")

    @property
    def is_send(self) -> bool:
        return self.kind is Kind.SEND

    @property
    def channel(self) -> Tuple[str, str]:
        """The (sender, receiver) channel this event writes to or reads from."""
        if self.kind is Kind.SEND:
            return (self.owner, self.peer)
        return (self.peer, self.owner)

    def __lt__(self, other: "AsyncEvent") -> bool:
        return self._key() < other._key()

    def _key(self) -> Tuple[str, str, str, str]:
        return (self.owner, self.kind.value, self.peer, self.value)

    def __str__(self) -> str:
        if self.kind is Kind.SEND:
            return f"{self.owner}|>{self.peer}!{self.value}"
        return f"{self.owner}<|{self.peer}?{self.value}"


SyncWord = Tuple[SyncEvent, ...]
AsyncWord = Tuple[AsyncEvent, ...]
Word = Union[SyncWord, AsyncWord]


def split_word(word: Iterable[SyncEvent]) -> AsyncWord:
    out = []
    for event in word:
        out.append(event.send)
        out.append(event.receive)
    return tuple(out)


def unsplit_word(word: Sequence[AsyncEvent]) -> SyncWord:
    if len(word) % 2:
        raise NotInImage("odd length word cannot be a split")
    out = []
    for i in range(0, len(word), 2):
        send, recv = word[i], word[i + 1]
        if not send.is_send or recv.is_send or send.owner != recv.peer or send.peer != recv.owner or send.value != recv.value:
            raise NotInImage(f"position {i}: {send} is not immediately matched (got {recv})")
        out.append(SyncEvent(send.owner, send.peer, send.value))
    return tuple(out)


def project(word: Sequence, participant: str) -> tuple:
    """Keep the events in which ``participant`` is active, in order."""
    out = []
    for event in word:
        if isinstance(event, SyncEvent):
            if event.involves(participant):
                out.append(event)
        elif event.owner == participant:
            out.append(event)
    return tuple(out)


def channel_values(word: Sequence[AsyncEvent], sender: str, receiver: str, kind: Kind) -> Tuple[str, ...]:
    if sender == receiver:
        raise ValueError("a channel needs two distinct participants")
    if kind is Kind.SEND:
        return tuple(e.value for e in word if e.is_send and e.owner == sender and e.peer == receiver)
    return tuple(e.value for e in word if not e.is_send and e.owner == receiver and e.peer == sender)


def is_channel_compliant(word: Sequence[AsyncEvent]) -> bool:
    # Single pass: every receive must read the oldest pending send on its channel.
    pending: dict = {}
    for event in word:
        queue = pending.setdefault(event.channel, [])
        if event.is_send:
            queue.append(event.value)
        else:
            if not queue or queue[0] != event.value:
                return False
            queue.pop(0)
    return True


def parse_sync_event(text: str) -> SyncEvent:
    match = _SYNC_RE.match(text.strip())
    if not match:
        raise ValueError(f"malformed synchronous event {text!r}")
    return SyncEvent(*match.groups())


def parse_async_event(text: str) -> AsyncEvent:
    match = _ASYNC_RE.match(text.strip())
    if not match:
        raise ValueError(f"malformed asynchronous event {text!r}")
    owner, arrow, peer, mark, value = match.groups()
    if (arrow == "|>") != (mark == "!"):
        raise ValueError(f"inconsistent event {text!r}")
    return AsyncEvent(Kind.SEND if mark == "!" else Kind.RECEIVE, owner, peer, value)


def parse_async_word(text: str) -> AsyncWord:
    """Parse whitespace/comma separated events, or ``eps`` for the empty word."""
    tokens = [t for t in re.split(r"[\s,]+", text.strip()) if t and t not in ("eps", "ε")]
    return tuple(parse_async_event(t) for t in tokens)


def render_word(word: Sequence) -> str:
    if not word:
        return "eps"
    return " ".join(str(e) for e in word)
