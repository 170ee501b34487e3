"""Directory-based MESI coherence with speculative delay gating.

The shared level keeps an inclusive directory: one entry per cached
line with its global state, the owning core for E/M, and a bitmask of
cores whose private L1s hold a copy.  A line nobody caches has no
entry (canonical invalid).

Speculative accesses are never allowed to generate cross-core traffic
that a later squash could not undo:

 * a speculative load of a line another core holds in E or M is
   *delayed* — serviced at full miss latency with no state change
   anywhere, and replayed as an ordinary access if the window commits;
 * a speculative store is delayed whenever any remote copy exists, and
   also when it would have to upgrade a locally persistent shared line
   (that upgrade could not be rolled back on squash);
 * speculative fills are granted S, never E, so squashing the window
   restores the directory exactly.

Committed accesses use plain MESI: loads of a remotely owned line
recall the owner and downgrade everyone to S, stores invalidate remote
copies.  Either recall costs full miss latency at the requester.
"""

from __future__ import annotations

from dataclasses import dataclass

from .cache import CohState


@dataclass
class DirEntry:
    state: CohState
    owner: int | None = None
    sharers: int = 0  # bitmask of cores with an L1 copy


@dataclass(frozen=True)
class LoadGrant:
    delayed: bool = False
    recall: bool = False  # remote owner must be downgraded first
    grant: CohState = CohState.SHARED


@dataclass(frozen=True)
class StoreGrant:
    delayed: bool = False
    invalidate_cores: int = 0  # L1 copies to shoot down (committed RFO)
    recall: bool = False
    grant: CohState = CohState.MODIFIED


class Directory:
    def __init__(self, num_cores: int) -> None:
        if num_cores < 1:
            raise ValueError("need at least one core")
        self.num_cores = num_cores
        self._entries: dict[int, DirEntry] = {}

    # -- queries -------------------------------------------------------

    def entry(self, line: int) -> DirEntry | None:
        return self._entries.get(line)

    def state(self, line: int) -> CohState:
        e = self._entries.get(line)
        return e.state if e is not None else CohState.INVALID

    def sharers(self, line: int) -> int:
        e = self._entries.get(line)
        return e.sharers if e is not None else 0

    def has_remote_copy(self, line: int, core: int) -> bool:
        e = self._entries.get(line)
        if e is None:
            return False
        if e.sharers & ~(1 << core):
            return True
        return e.state in (CohState.EXCLUSIVE, CohState.MODIFIED) and e.owner != core

    # -- access decisions ----------------------------------------------

    def grant_load(self, line: int, core: int, speculative: bool) -> LoadGrant:
        e = self._entries.get(line)
        if e is None:
            # untracked line: committed loads take E, speculative only S
            grant = CohState.SHARED if speculative else CohState.EXCLUSIVE
            return LoadGrant(grant=grant)
        if e.state is CohState.SHARED:
            return LoadGrant(grant=CohState.SHARED)
        # E or M somewhere
        if e.owner == core:
            return LoadGrant(grant=e.state)
        if speculative:
            return LoadGrant(delayed=True)
        return LoadGrant(recall=True, grant=CohState.SHARED)

    def grant_store(
        self, line: int, core: int, speculative: bool, local_persistent_shared: bool
    ) -> StoreGrant:
        e = self._entries.get(line)
        remote = self.has_remote_copy(line, core)
        if speculative:
            if remote or local_persistent_shared:
                return StoreGrant(delayed=True)
            return StoreGrant(grant=CohState.MODIFIED)
        if e is None:
            return StoreGrant(grant=CohState.MODIFIED)
        if remote:
            victims = e.sharers & ~(1 << core)
            return StoreGrant(invalidate_cores=victims, recall=True)
        return StoreGrant(grant=CohState.MODIFIED)

    # -- mutations -------------------------------------------------------

    def note_l1_fill(self, line: int, core: int, state: CohState) -> None:
        e = self._entries.get(line)
        if e is None:
            e = DirEntry(state=state)
            self._entries[line] = e
        e.sharers |= 1 << core
        e.state = state
        if state in (CohState.EXCLUSIVE, CohState.MODIFIED):
            e.owner = core
        else:
            e.owner = None

    def note_l2_fill(self, line: int, state: CohState = CohState.SHARED) -> None:
        if line not in self._entries:
            self._entries[line] = DirEntry(state=state)

    def remove_sharer(self, line: int, core: int) -> None:
        e = self._entries.get(line)
        if e is not None:
            e.sharers &= ~(1 << core)

    def downgrade(self, line: int) -> None:
        e = self._entries.get(line)
        if e is not None:
            e.state = CohState.SHARED
            e.owner = None

    def upgrade_for_store(self, line: int, core: int) -> None:
        e = self._entries.get(line)
        if e is None:
            e = DirEntry(state=CohState.MODIFIED)
            self._entries[line] = e
        e.state = CohState.MODIFIED
        e.owner = core
        e.sharers &= 1 << core

    def drop(self, line: int) -> None:
        self._entries.pop(line, None)

    # -- introspection ----------------------------------------------------

    def lines(self) -> list[int]:
        return sorted(self._entries)

    def fingerprint(self) -> tuple:
        return tuple(
            (line, e.state.value, e.owner, e.sharers)
            for line, e in sorted(self._entries.items())
        )


@dataclass
class DelayedOp:
    """A speculative access parked until its window resolves."""

    thread: int
    line: int
    is_store: bool = False
    is_ifetch: bool = False
