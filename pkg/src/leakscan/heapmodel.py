"""Symbolic heap with ownership, reference counts, and ownership-event traces.

Heaps are per-path values.  Mutating methods act on an exclusively held heap;
forks call :meth:`Heap.copy` first.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Optional, Union

from .frontend.lexer import Span


class ObjState(enum.Enum):
    ALLOCATED = "Allocated"
    FREED = "Freed"


@dataclass(frozen=True, order=True)
class Caller:
    def __str__(self):
        return "Caller"


@dataclass(frozen=True, order=True)
class GlobalOwner:
    name: str

    def __str__(self):
        return f"Global({self.name})"


@dataclass(frozen=True, order=True)
class ParamSlot:
    path: str

    def __str__(self):
        return f"ParamSlot({self.path})"


@dataclass(frozen=True, order=True)
class HeapParent:
    id: int

    def __str__(self):
        return f"HeapParent({self.id})"


Owner = Union[Caller, GlobalOwner, ParamSlot, HeapParent]
CALLER = Caller()


class EventKind(enum.Enum):
    ALLOCATE = "Allocate"
    FREE = "Free"
    COPY = "Copy"
    RETURN = "Return"
    STORE_GLOBAL = "StoreGlobal"
    STORE_PARAM = "StoreParam"
    TRANSFER = "TransferOwnership"
    # extensions: a reference dropped without freeing, and a hand-off to a
    # global collection routine
    RELEASE = "Release"
    COLLECTION = "GlobalCollectionCall"


@dataclass(frozen=True)
class OwnershipEvent:
    kind: EventKind
    obj: int
    site: Optional[Span] = None
    detail: str = ""
    # snapshot of the subject object right after the event
    refcount: int = 0
    owners: frozenset = frozenset()
    freed: bool = False
    cascade: bool = False
    cell: Any = field(default=None, compare=False, repr=False)

    def to_json(self) -> dict:
        d = {"kind": self.kind.value, "obj": self.obj, "refcount": self.refcount,
             "owners": sorted(str(o) for o in self.owners), "freed": self.freed}
        if self.detail:
            d["detail"] = self.detail
        if self.site is not None:
            d["site"] = [self.site.file, self.site.offset, self.site.length]
        if self.cascade:
            d["cascade"] = True
        return d


@dataclass
class MemoryObject:
    id: int
    alloc_site: Optional[Span]
    state: ObjState = ObjState.ALLOCATED
    refcount: int = 1
    owners: frozenset = frozenset({CALLER})
    escaped: bool = False
    alloc_condition: tuple = ()
    children: dict = field(default_factory=dict)  # field key -> child id
    parent: Optional[tuple[int, Any]] = None
    # analysis bookkeeping
    label: str = ""
    origin: Optional[Span] = None  # innermost allocation call
    internal: bool = False  # leaked inside an inlined callee, not ours to report

    @property
    def allocated(self) -> bool:
        return self.state is ObjState.ALLOCATED


class ForestViolation(Exception):
    pass


class Heap:
    def __init__(self):
        self.objects: dict[int, MemoryObject] = {}
        self.trace: list[OwnershipEvent] = []
        self.diagnostics: list[str] = []
        self.next_id = 0

    def copy(self) -> "Heap":
        h = Heap()
        h.objects = {k: replace(o, children=dict(o.children)) for k, o in self.objects.items()}
        h.trace = list(self.trace)
        h.diagnostics = list(self.diagnostics)
        h.next_id = self.next_id
        return h

    def __getitem__(self, oid: int) -> MemoryObject:
        return self.objects[oid]

    def _event(self, kind: EventKind, oid: int, site=None, detail="", cascade=False, cell=None):
        o = self.objects[oid]
        self.trace.append(OwnershipEvent(kind, oid, site, detail, o.refcount, o.owners,
                                         not o.allocated, cascade, cell))

    # ------------------------------------------------------------ operations

    def allocate(self, site: Optional[Span], condition: tuple = ()) -> int:
        oid = self.next_id
        self.next_id += 1
        self.objects[oid] = MemoryObject(oid, site, alloc_condition=tuple(condition))
        self._event(EventKind.ALLOCATE, oid, site)
        return oid

    def free_object(self, oid: int, site: Optional[Span] = None, cascade: bool = False) -> None:
        o = self.objects[oid]
        if not o.allocated:
            self.diagnostics.append(f"double free of object {oid}")
            return
        o.refcount = 0
        o.state = ObjState.FREED
        o.owners = o.owners - {CALLER}
        if o.parent is not None:
            self.detach(*o.parent)
        self._event(EventKind.FREE, oid, site, cascade=cascade)
        for key, child in sorted(o.children.items(), key=lambda kv: str(kv[0])):
            c = self.objects[child]
            c.parent = None
            c.owners = c.owners - {HeapParent(oid)}
            if c.allocated:
                self.drop_ref(child, site, HeapParent(oid), cascade=True)
        o.children = {}

    def copy_ref(self, oid: int, site: Optional[Span] = None, detail: str = "") -> None:
        o = self.objects[oid]
        if not o.allocated:
            self.diagnostics.append(f"use after free: copy of object {oid}")
            return
        o.refcount += 1
        self._event(EventKind.COPY, oid, site, detail)

    def drop_ref(self, oid: int, site: Optional[Span] = None, entity: Optional[Owner] = None,
                 cascade: bool = False) -> None:
        o = self.objects[oid]
        if not o.allocated or o.refcount < 1:
            return
        if o.refcount == 1:
            self.free_object(oid, site, cascade=cascade)
            return
        o.refcount -= 1
        if entity is not None:
            o.owners = o.owners - {entity}
        self._event(EventKind.RELEASE, oid, site, str(entity) if entity else "", cascade=cascade)

    def transfer_ownership(self, oid: int, entity: Owner, site: Optional[Span] = None) -> None:
        o = self.objects[oid]
        if not o.allocated:
            self.diagnostics.append(f"use after free: ownership transfer of object {oid}")
            return
        o.owners = o.owners | {entity}
        if isinstance(entity, (GlobalOwner, ParamSlot)) or entity == CALLER:
            o.escaped = True
        if isinstance(entity, GlobalOwner):
            o.refcount += 1
        self._event(EventKind.TRANSFER, oid, site, str(entity))

    def attach_inner(self, parent: int, key: Any, child: int, site: Optional[Span] = None) -> None:
        p, c = self.objects[parent], self.objects[child]
        if c.parent is not None:
            raise ForestViolation(f"object {child} already has parent {c.parent[0]}")
        anc: Optional[int] = parent
        while anc is not None:
            if anc == child:
                raise ForestViolation(f"attaching {child} under {parent} forms a cycle")
            up = self.objects[anc].parent
            anc = up[0] if up else None
        p.children[key] = child
        c.parent = (parent, key)
        c.owners = c.owners | {HeapParent(parent)}
        self._event(EventKind.TRANSFER, child, site, str(HeapParent(parent)))

    def detach(self, parent: int, key: Any) -> None:
        p = self.objects[parent]
        child = p.children.pop(key, None)
        if child is None:
            return
        c = self.objects[child]
        c.parent = None
        c.owners = c.owners - {HeapParent(parent)}

    # --------------------------------------------- escape-flavoured records

    def record_return(self, oid: int, site: Optional[Span] = None) -> None:
        if not self.objects[oid].allocated:
            return
        self._event(EventKind.RETURN, oid, site)
        self.transfer_ownership(oid, CALLER, site)

    def store_global(self, oid: int, name: str, site: Optional[Span] = None, cell=None) -> None:
        if not self.objects[oid].allocated:
            return
        self._event(EventKind.STORE_GLOBAL, oid, site, name, cell=cell)
        self.transfer_ownership(oid, GlobalOwner(name), site)

    def release_global(self, oid: int, name: str, site: Optional[Span] = None) -> None:
        o = self.objects[oid]
        if not (o.allocated and GlobalOwner(name) in o.owners):
            return
        # losing a global slot never frees; an unreferenced object is a leak
        o.owners = o.owners - {GlobalOwner(name)}
        if o.refcount > 1:
            o.refcount -= 1
        self._event(EventKind.RELEASE, oid, site, str(GlobalOwner(name)))

    def store_param(self, oid: int, path: str, site: Optional[Span] = None, cell=None) -> None:
        if not self.objects[oid].allocated:
            return
        self._event(EventKind.STORE_PARAM, oid, site, path, cell=cell)
        self.transfer_ownership(oid, ParamSlot(path), site)

    def collection_call(self, oid: int, func: str, site: Optional[Span] = None) -> None:
        o = self.objects[oid]
        if not o.allocated:
            return
        o.escaped = True
        self._event(EventKind.COLLECTION, oid, site, func)

    # --------------------------------------------------------------- queries

    def ancestors(self, oid: int) -> list[int]:
        out = []
        p = self.objects[oid].parent
        while p is not None:
            out.append(p[0])
            p = self.objects[p[0]].parent
        return out

    def events_for(self, oid: int) -> list[OwnershipEvent]:
        return [e for e in self.trace if e.obj == oid]

    def check_invariants(self) -> list[str]:
        bad = []
        for o in self.objects.values():
            if o.refcount < 0:
                bad.append(f"object {o.id} refcount {o.refcount}")
            if not o.allocated and o.refcount != 0:
                bad.append(f"object {o.id} freed with refcount {o.refcount}")
        parents: dict[int, int] = {}
        for o in self.objects.values():
            for child in o.children.values():
                if child in parents:
                    bad.append(f"object {child} has two parents")
                parents[child] = o.id
        return bad


# ---------------------------------------------------------------------------
# Bounded-trace readings of the ownership patterns.
#
# A trace is cut into instants.  Allocate, Free, Copy, Return, StoreGlobal,
# StoreParam, GlobalCollectionCall and Release open an instant;
# TransferOwnership and cascade events belong to the instant they follow.  F reads
# "at this or a later instant", G reads "at every instant to the end".
# free(p) and shared(p, n) read the object's snapshot after the instant.


class Pattern(enum.Enum):
    AROR = "AROR"
    IAROR = "IAROR"
    DAOR = "DAOR"
    DAOOR = "DAOOR"
    AGOR = "AGOR"
    DAGOR = "DAGOR"
    ACR = "ACR"


_OPENERS = {EventKind.ALLOCATE, EventKind.FREE, EventKind.COPY, EventKind.RETURN,
            EventKind.STORE_GLOBAL, EventKind.STORE_PARAM, EventKind.COLLECTION, EventKind.RELEASE}


@dataclass
class _Snap:
    refcount: int
    owners: frozenset
    freed: bool


def _instants(trace: Iterable[OwnershipEvent]) -> list[list[OwnershipEvent]]:
    out: list[list[OwnershipEvent]] = []
    for e in trace:
        if (e.kind in _OPENERS and not e.cascade) or not out:
            out.append([e])
        else:
            out[-1].append(e)
    return out


def _history(instants) -> tuple[list[int], list[dict[int, _Snap]]]:
    """Object ids and the per-instant snapshot of every object alive so far."""
    ids: list[int] = []
    snaps: list[dict[int, _Snap]] = []
    cur: dict[int, _Snap] = {}
    for inst in instants:
        for e in inst:
            if e.obj not in cur:
                ids.append(e.obj)
            cur[e.obj] = _Snap(e.refcount, e.owners, e.freed)
        snaps.append(dict(cur))
    return ids, snaps


def _has(inst, kind: EventKind, oid: int, detail: Optional[str] = None) -> bool:
    return any(e.kind is kind and e.obj == oid and (detail is None or e.detail == detail)
               for e in inst)


def _alloc_at(instants, oid) -> Optional[int]:
    for k, inst in enumerate(instants):
        if _has(inst, EventKind.ALLOCATE, oid):
            return k
    return None


def _free_iff_zero(snaps, oid, start) -> bool:
    for s in snaps[start:]:
        snap = s.get(oid)
        if snap is not None and snap.freed != (snap.refcount == 0):
            return False
    return True


def _prev_snap(snaps, k, oid) -> Optional[_Snap]:
    return snaps[k - 1].get(oid) if k > 0 else None


def _aror(instants, snaps, p) -> bool:
    i = _alloc_at(instants, p)
    if i is None or snaps[i][p].refcount != 1:
        return False
    hit = any(_has(instants[j], EventKind.RETURN, p) and _has(instants[j], EventKind.TRANSFER, p, "Caller")
              for j in range(i, len(instants)))
    return hit and _free_iff_zero(snaps, p, i)


def _agor(instants, snaps, p) -> bool:
    i = _alloc_at(instants, p)
    if i is None or snaps[i][p].refcount != 1:
        return False
    hit = any(_has(instants[j], EventKind.STORE_GLOBAL, p)
              and any(isinstance(o, GlobalOwner) for o in snaps[j][p].owners)
              for j in range(i, len(instants)))
    return hit and _free_iff_zero(snaps, p, i)


def _iaror(instants, snaps, p, q) -> bool:
    i = _alloc_at(instants, q)
    if i is None or p == q or snaps[i][q].refcount != 1:
        return False
    hit = any(_has(instants[j], EventKind.RETURN, p) and q in snaps[j] and HeapParent(p) in snaps[j][q].owners
              for j in range(i, len(instants)))
    if not hit:
        return False
    for k, inst in enumerate(instants):
        if _has(inst, EventKind.FREE, p) and not any(e.cascade and e.obj == p for e in inst):
            before, after = _prev_snap(snaps, k, q), snaps[k].get(q)
            if before is None or after is None or before.refcount < 1:
                return False
            if after.refcount != before.refcount - 1:
                return False
    return True


def _daor(instants, snaps, p) -> bool:
    for k, inst in enumerate(instants):
        if _has(inst, EventKind.FREE, p):
            s = snaps[k][p]
            if not (s.refcount == 0 and s.freed and CALLER not in s.owners):
                return False
    return True


def _daoor(instants, snaps, q) -> bool:
    for k, inst in enumerate(instants):
        # a cascade free comes from the parent going away, not an inner release
        if not any(e.kind is EventKind.FREE and e.obj == q and not e.cascade for e in inst):
            continue
        before = _prev_snap(snaps, k, q)
        if before is None:
            continue
        parents = [o.id for o in before.owners if isinstance(o, HeapParent)]
        if not parents:
            continue
        after = snaps[k][q]
        if after.refcount != before.refcount - 1:
            return False
        for par in parents:
            ps = snaps[k].get(par)
            if ps is None or CALLER not in ps.owners:
                return False
    return True


def _dagor(instants, snaps, p) -> bool:
    for k in range(len(instants)):
        s = snaps[k].get(p)
        if s is None or not any(isinstance(o, GlobalOwner) for o in s.owners):
            continue
        if not any((snaps[m].get(p) is not None and snaps[m][p].freed and snaps[m][p].refcount == 0)
                   for m in range(k, len(instants))):
            return False
    return True


def _acr(instants, snaps, p) -> bool:
    for k, inst in enumerate(instants):
        if _has(inst, EventKind.COPY, p):
            before = _prev_snap(snaps, k, p)
            copy_ev = next(e for e in inst if e.kind is EventKind.COPY and e.obj == p)
            if before is None or copy_ev.refcount != before.refcount + 1:
                return False
    return True


def check_trace(trace: Iterable[OwnershipEvent], pattern: Pattern | str) -> bool:
    """Whether the finite trace is a model of the named ownership pattern."""
    pattern = Pattern(pattern) if isinstance(pattern, str) else pattern
    instants = _instants(trace)
    ids, snaps = _history(instants)
    if pattern is Pattern.AROR:
        return any(_aror(instants, snaps, p) for p in ids)
    if pattern is Pattern.AGOR:
        return any(_agor(instants, snaps, p) for p in ids)
    if pattern is Pattern.IAROR:
        return any(_iaror(instants, snaps, p, q) for p in ids for q in ids)
    if pattern is Pattern.DAOR:
        return all(_daor(instants, snaps, p) for p in ids)
    if pattern is Pattern.DAOOR:
        return all(_daoor(instants, snaps, p) for p in ids)
    if pattern is Pattern.DAGOR:
        return all(_dagor(instants, snaps, p) for p in ids)
    return all(_acr(instants, snaps, p) for p in ids)
