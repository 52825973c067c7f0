"""m-separation on ADMGs.

A path is blocked by Z when some non-collider on it is in Z, or some
collider on it is neither in Z nor an ancestor of Z. The decision procedure
is a reachability search over (vertex, arrival-mark) states; the
path-enumeration oracle applies the blocking rule to every simple path and
exists so the two can be checked against each other.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import GraphTooLarge, OverlapError
from .graph import BIDIRECTED, DIRECTED, REVERSED, Admg, Path, ancestors

# Largest vertex count for which exhaustive path enumeration is allowed.
ORACLE_VERTEX_LIMIT = 16


@dataclass(frozen=True)
class SeparationQuery:
    A: frozenset[str]
    B: frozenset[str]
    Z: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "A", frozenset(self.A))
        object.__setattr__(self, "B", frozenset(self.B))
        object.__setattr__(self, "Z", frozenset(self.Z))

    def validate(self, g: Admg) -> None:
        g.require_all(self.A | self.B | self.Z)
        for left, right, names in (
            (self.A, self.B, "A/B"),
            (self.A, self.Z, "A/Z"),
            (self.B, self.Z, "B/Z"),
        ):
            if left & right:
                raise OverlapError(f"{names} overlap: {sorted(left & right)}")


def _moves(g: Admg, v: str, arrived_head: bool, Z, anz):
    """Legal continuations of a walk currently at interior vertex v.

    Yields (next vertex, next arrival mark). v is a collider exactly when
    both incident marks are arrowheads at v; colliders pass when in the
    ancestor closure of Z, non-colliders when outside Z.
    """
    # leave through a tail (v -> w): v is a non-collider
    if v not in Z:
        for w in g._ch[v]:
            yield w, True
    # leave through an arrowhead (v <- w or v <-> w)
    passable = (v in anz) if arrived_head else (v not in Z)
    if passable:
        for w in g._pa[v]:
            yield w, False
        for w in g._sib[v]:
            yield w, True


def m_separated(g: Admg, query: SeparationQuery) -> bool:
    """True iff every path between A and B is blocked by Z."""
    query.validate(g)
    anz = ancestors(g, query.Z)
    A, B, Z = query.A, query.B, query.Z

    stack: list[tuple[str, bool]] = []
    seen: set[tuple[str, bool]] = set()
    # endpoints impose no blocking constraint: seed every edge out of A
    for a in A:
        for w in g._ch[a]:
            stack.append((w, True))
        for w in g._pa[a]:
            stack.append((w, False))
        for w in g._sib[a]:
            stack.append((w, True))

    while stack:
        state = stack.pop()
        if state in seen:
            continue
        seen.add(state)
        v, arrived_head = state
        if v in B:
            return False
        for nxt in _moves(g, v, arrived_head, Z, anz):
            if nxt not in seen:
                stack.append(nxt)
    return True


def _path_open(path: Path, Z, anz) -> bool:
    """Apply the blocking definition to one enumerated path."""
    for i, v in enumerate(path.vertices[1:-1], start=1):
        head_in = path.marks[i - 1] in (DIRECTED, BIDIRECTED)
        head_out = path.marks[i] in (REVERSED, BIDIRECTED)
        if head_in and head_out:  # collider
            if v not in anz:
                return False
        else:
            if v in Z:
                return False
    return True


def _all_simple_paths(g: Admg, A, B) -> list[Path]:
    """Every simple path between A and B, in deterministic order."""
    paths: list[Path] = []

    def neighbors(v):
        out = [(w, DIRECTED) for w in g._ch[v]]
        out += [(w, REVERSED) for w in g._pa[v]]
        out += [(w, BIDIRECTED) for w in g._sib[v]]
        out.sort()
        return out

    def walk(verts: list[str], marks: list[str]):
        v = verts[-1]
        if v in B:
            paths.append(Path(tuple(verts), tuple(marks)))
            return  # stop at the first B vertex reached
        for w, mark in neighbors(v):
            if w in verts or w in A:
                continue
            verts.append(w)
            marks.append(mark)
            walk(verts, marks)
            verts.pop()
            marks.pop()

    for a in sorted(A):
        for w, mark in neighbors(a):
            if w in A:
                continue
            walk([a, w], [mark])

    paths.sort(key=lambda p: (p.vertices, p.marks))
    return paths


def open_paths_oracle(g: Admg, query: SeparationQuery) -> list[Path]:
    """All m-connecting simple paths between A and B given Z.

    Exhaustive enumeration; guarded to graphs of at most
    ORACLE_VERTEX_LIMIT vertices.
    """
    if len(g.vertices) > ORACLE_VERTEX_LIMIT:
        raise GraphTooLarge(
            f"{len(g.vertices)} vertices exceed the enumeration guard "
            f"({ORACLE_VERTEX_LIMIT})"
        )
    query.validate(g)
    anz = ancestors(g, query.Z)
    return [
        p for p in _all_simple_paths(g, query.A, query.B)
        if _path_open(p, query.Z, anz)
    ]


def find_open_path(
    g: Admg, A: Iterable[str], B: Iterable[str], Z: Iterable[str],
    budget: int = 200_000,
) -> Optional[Path]:
    """First open simple path between A and B given Z, or None.

    Used to attach a witness to failed criterion conditions. The search is
    depth-first over simple paths with the blocking rule applied
    incrementally; `budget` caps node expansions so adversarial graphs
    degrade to a missing witness rather than a hang.
    """
    A = g.require_all(A)
    B = g.require_all(B)
    Z = g.require_all(Z)
    anz = ancestors(g, Z)
    spent = 0

    def neighbors(v):
        out = [(w, DIRECTED) for w in g._ch[v]]
        out += [(w, REVERSED) for w in g._pa[v]]
        out += [(w, BIDIRECTED) for w in g._sib[v]]
        out.sort()
        return out

    def walk(verts, marks) -> Optional[Path]:
        nonlocal spent
        spent += 1
        if spent > budget:
            return None
        v = verts[-1]
        if v in B:
            return Path(tuple(verts), tuple(marks))
        for w, mark in neighbors(v):
            if w in verts or w in A:
                continue
            # interior blocking check for v before stepping to w
            if len(verts) > 1:
                head_in = marks[-1] in (DIRECTED, BIDIRECTED)
                head_out = mark in (REVERSED, BIDIRECTED)
                if head_in and head_out:
                    if v not in anz:
                        continue
                elif v in Z:
                    continue
            found = walk(verts + [w], marks + [mark])
            if found is not None:
                return found
        return None

    for a in sorted(A):
        for w, mark in neighbors(a):
            if w in A:
                continue
            found = walk([a, w], [mark])
            if found is not None:
                return found
    return None
