"""Trace event model and its line-oriented text format.

One event per line, `#` starts a comment.  Threads are written `t<N>`,
windows `w<N>` (bare integers are accepted too), addresses in hex or
decimal.  A LOAD/STORE/IFETCH with a window id executes in-flight
inside that speculative window; without one it is an ordinary
committed access.

    OPEN t0 w1
    LOAD t0 0x1040 w1          # speculative
    MGMT flush t1 0x2000       # committed cache-management op
    TLBMISS_LOAD t0 0x8000 w1  # page-walk fill, deferred to resolution
    COMMIT t0 w1
    MEASURE t1 0x1040          # timed probe, reported with its class
    BARRIER                    # drains retry queues; a scheduling fence
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class TraceParseError(Exception):
    pass


class EventKind(Enum):
    OPEN = "OPEN"
    LOAD = "LOAD"
    STORE = "STORE"
    IFETCH = "IFETCH"
    PREFETCH = "PREFETCH"
    MGMT = "MGMT"
    TLBMISS_LOAD = "TLBMISS_LOAD"
    COMMIT = "COMMIT"
    SQUASH = "SQUASH"
    MEASURE = "MEASURE"
    BARRIER = "BARRIER"


MGMT_OPS = ("flush", "invd", "prefetch")

ACCESS_KINDS = (EventKind.LOAD, EventKind.STORE, EventKind.IFETCH)


@dataclass(frozen=True)
class TraceEvent:
    kind: EventKind
    thread: int = 0
    addr: int | None = None
    window: int | None = None
    mgmt_op: str | None = None

    # -- constructors --------------------------------------------------

    @classmethod
    def open(cls, thread: int, window: int) -> "TraceEvent":
        return cls(EventKind.OPEN, thread=thread, window=window)

    @classmethod
    def load(cls, thread: int, addr: int, window: int | None = None) -> "TraceEvent":
        return cls(EventKind.LOAD, thread=thread, addr=addr, window=window)

    @classmethod
    def store(cls, thread: int, addr: int, window: int | None = None) -> "TraceEvent":
        return cls(EventKind.STORE, thread=thread, addr=addr, window=window)

    @classmethod
    def ifetch(cls, thread: int, addr: int, window: int | None = None) -> "TraceEvent":
        return cls(EventKind.IFETCH, thread=thread, addr=addr, window=window)

    @classmethod
    def prefetch(cls, thread: int, addr: int) -> "TraceEvent":
        return cls(EventKind.PREFETCH, thread=thread, addr=addr)

    @classmethod
    def mgmt(cls, op: str, thread: int, addr: int, window: int | None = None) -> "TraceEvent":
        if op not in MGMT_OPS:
            raise TraceParseError(f"unknown MGMT op {op!r}")
        return cls(EventKind.MGMT, thread=thread, addr=addr, window=window, mgmt_op=op)

    @classmethod
    def tlbmiss_load(cls, thread: int, addr: int, window: int) -> "TraceEvent":
        return cls(EventKind.TLBMISS_LOAD, thread=thread, addr=addr, window=window)

    @classmethod
    def commit(cls, thread: int, window: int) -> "TraceEvent":
        return cls(EventKind.COMMIT, thread=thread, window=window)

    @classmethod
    def squash(cls, thread: int, window: int) -> "TraceEvent":
        return cls(EventKind.SQUASH, thread=thread, window=window)

    @classmethod
    def measure(cls, thread: int, addr: int) -> "TraceEvent":
        return cls(EventKind.MEASURE, thread=thread, addr=addr)

    @classmethod
    def barrier(cls) -> "TraceEvent":
        return cls(EventKind.BARRIER)

    # -- text form -------------------------------------------------------

    def format(self) -> str:
        k = self.kind
        if k is EventKind.BARRIER:
            return "BARRIER"
        if k is EventKind.OPEN or k is EventKind.COMMIT or k is EventKind.SQUASH:
            return f"{k.value} t{self.thread} w{self.window}"
        if k is EventKind.MEASURE or k is EventKind.PREFETCH:
            return f"{k.value} t{self.thread} {self.addr:#x}"
        if k is EventKind.MGMT:
            tail = f" w{self.window}" if self.window is not None else ""
            return f"MGMT {self.mgmt_op} t{self.thread} {self.addr:#x}{tail}"
        tail = f" w{self.window}" if self.window is not None else ""
        return f"{k.value} t{self.thread} {self.addr:#x}{tail}"


def _int_field(tok: str, prefix: str, what: str, lineno: int) -> int:
    raw = tok[len(prefix):] if tok.lower().startswith(prefix) else tok
    try:
        return int(raw, 0)
    except ValueError:
        raise TraceParseError(f"line {lineno}: bad {what} {tok!r}") from None


def parse_event(line: str, lineno: int = 0) -> TraceEvent | None:
    """Parse one line; returns None for blanks and comments."""
    text = line.split("#", 1)[0].strip()
    if not text:
        return None
    toks = text.split()
    name = toks[0].upper()
    try:
        kind = EventKind(name)
    except ValueError:
        raise TraceParseError(f"line {lineno}: unknown event {toks[0]!r}") from None

    def thread(i: int) -> int:
        return _int_field(toks[i], "t", "thread", lineno)

    def window(i: int) -> int:
        return _int_field(toks[i], "w", "window", lineno)

    def addr(i: int) -> int:
        return _int_field(toks[i], "", "address", lineno)

    def need(n: int, usage: str) -> None:
        if len(toks) != n:
            raise TraceParseError(f"line {lineno}: usage: {usage}")

    if kind is EventKind.BARRIER:
        need(1, "BARRIER")
        return TraceEvent.barrier()
    if kind in (EventKind.OPEN, EventKind.COMMIT, EventKind.SQUASH):
        need(3, f"{name} <thread> <window>")
        return TraceEvent(kind, thread=thread(1), window=window(2))
    if kind in (EventKind.MEASURE, EventKind.PREFETCH):
        need(3, f"{name} <thread> <addr>")
        return TraceEvent(kind, thread=thread(1), addr=addr(2))
    if kind is EventKind.MGMT:
        if len(toks) not in (4, 5):
            raise TraceParseError(f"line {lineno}: usage: MGMT <op> <thread> <addr> [<window>]")
        op = toks[1].lower()
        if op not in MGMT_OPS:
            raise TraceParseError(f"line {lineno}: unknown MGMT op {toks[1]!r}")
        win = window(4) if len(toks) == 5 else None
        return TraceEvent(kind, thread=thread(2), addr=addr(3), window=win, mgmt_op=op)
    if kind is EventKind.TLBMISS_LOAD:
        need(4, "TLBMISS_LOAD <thread> <addr> <window>")
        return TraceEvent(kind, thread=thread(1), addr=addr(2), window=window(3))
    # LOAD / STORE / IFETCH
    if len(toks) not in (3, 4):
        raise TraceParseError(f"line {lineno}: usage: {name} <thread> <addr> [<window>]")
    win = window(3) if len(toks) == 4 else None
    return TraceEvent(kind, thread=thread(1), addr=addr(2), window=win)


def parse_trace(text: str) -> list[TraceEvent]:
    events = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        ev = parse_event(line, lineno)
        if ev is not None:
            events.append(ev)
    return events


def format_trace(events: list[TraceEvent]) -> str:
    return "\n".join(ev.format() for ev in events) + "\n"
