from __future__ import annotations

import logging
from collections import deque
from itertools import combinations

from ..citests import ConditionalIndependenceTest
from ..dataset import Dataset
from ..graph import EndpointTable, GraphKind, Mark, MixedGraph
from ..models import ClConfig, Knowledge
from .skeleton import IndependenceOracle, Pair, SkeletonState, build_skeleton, resolve_inputs

logger = logging.getLogger(__name__)

# Cap on node expansions per uncovered-path search; giving up leaves circles.
PATH_SEARCH_LIMIT = 20000


def _update(t: EndpointTable, at: str, other: str, mark: Mark) -> bool:
    current = t.mark(at, other)
    if current is Mark.CIRCLE:
        t.set_mark(at, other, mark)
        return True
    if current is not mark:
        logger.debug("orientation conflict at %s on %s-%s: keeping %s", at, at, other, current.value)
    return False


def _reset_circles(t: EndpointTable) -> None:
    for a, b in list(t.pairs()):
        t.add(a, b, Mark.CIRCLE, Mark.CIRCLE)


def _apply_knowledge(t: EndpointTable, k: Knowledge) -> None:
    for a, b in list(t.pairs()):
        for x, y in ((a, b), (b, a)):
            if k.is_required(x, y):
                t.add(x, y, Mark.TAIL, Mark.ARROW)
                break
        else:
            # x -> y ruled out means x is not an ancestor of y
            if k.is_forbidden(a, b):
                _update(t, a, b, Mark.ARROW)
            if k.is_forbidden(b, a):
                _update(t, b, a, Mark.ARROW)


def _orient_colliders(t: EndpointTable, state: SkeletonState) -> None:
    for x, z, y in list(t.unshielded_triples()):
        pair = frozenset((x, y))
        if pair in state.unknown or z in state.sepsets.get(pair, frozenset()):
            continue
        _update(t, z, x, Mark.ARROW)
        _update(t, z, y, Mark.ARROW)


def possible_dsep(t: EndpointTable, x: str) -> list[str]:
    """Nodes reachable from x along paths where every inner node is a collider or in a triangle."""
    found: set[str] = set()
    queue: deque[tuple[str, str]] = deque()
    seen: set[tuple[str, str]] = set()
    for v in t.adjacent(x):
        found.add(v)
        queue.append((x, v))
        seen.add((x, v))
    while queue:
        a, b = queue.popleft()
        for c in t.adjacent(b):
            if c in (a, x) or (b, c) in seen:
                continue
            collider = t.mark(b, a) is Mark.ARROW and t.mark(b, c) is Mark.ARROW
            if collider or t.is_adjacent(a, c):
                found.add(c)
                seen.add((b, c))
                queue.append((b, c))
    order = {n: i for i, n in enumerate(t.ids)}
    return sorted(found, key=order.__getitem__)


def _possible_dsep_pass(
    state: SkeletonState,
    oracle: IndependenceOracle,
    max_cond_size: int | None,
) -> int:
    t = state.table
    pds = {x: possible_dsep(t, x) for x in t.ids}
    removed = 0
    for x, y in list(t.pairs()):
        done = False
        for source, other in ((x, y), (y, x)):
            pool = [v for v in pds[source] if v != other]
            # subsets of the adjacency set were already searched
            if set(pool) <= set(t.adjacent(source)):
                continue
            top = len(pool) if max_cond_size is None else min(len(pool), max_cond_size)
            for size in range(top + 1):
                for subset in combinations(pool, size):
                    if oracle.independent(source, other, subset):
                        t.remove(x, y)
                        state.sepsets[frozenset((x, y))] = frozenset(subset)
                        removed += 1
                        done = True
                        break
                if done:
                    break
            if done:
                break
    return removed


def _rule1(t: EndpointTable) -> bool:
    changed = False
    for b in t.ids:
        for a in t.adjacent(b):
            if t.mark(b, a) is not Mark.ARROW:
                continue
            for c in t.adjacent(b):
                if c == a or t.is_adjacent(a, c) or t.mark(b, c) is not Mark.CIRCLE:
                    continue
                changed = _update(t, b, c, Mark.TAIL) or changed
                changed = _update(t, c, b, Mark.ARROW) or changed
    return changed


def _rule2(t: EndpointTable) -> bool:
    changed = False
    for a in t.ids:
        for c in t.adjacent(a):
            if t.mark(c, a) is not Mark.CIRCLE:
                continue
            for b in t.adjacent(a):
                if b == c or not t.is_adjacent(b, c):
                    continue
                first = t.is_directed(a, b) and t.mark(c, b) is Mark.ARROW
                second = t.mark(b, a) is Mark.ARROW and t.is_directed(b, c)
                if first or second:
                    changed = _update(t, c, a, Mark.ARROW) or changed
                    break
    return changed


def _rule3(t: EndpointTable) -> bool:
    changed = False
    for b in t.ids:
        for theta in t.adjacent(b):
            if t.mark(b, theta) is not Mark.CIRCLE:
                continue
            shared = [v for v in t.adjacent(b) if v != theta and t.is_adjacent(v, theta)]
            for a, c in combinations(shared, 2):
                if t.is_adjacent(a, c):
                    continue
                if t.mark(b, a) is not Mark.ARROW or t.mark(b, c) is not Mark.ARROW:
                    continue
                if t.mark(theta, a) is Mark.CIRCLE and t.mark(theta, c) is Mark.CIRCLE:
                    changed = _update(t, b, theta, Mark.ARROW) or changed
                    break
    return changed


def _discriminating_start(t: EndpointTable, a: str, b: str, c: str) -> str | None:
    """Far end of a discriminating path <theta, ..., a, b, c> for b, if any."""
    queue = deque([a])
    seen = {a, b, c}
    while queue:
        v = queue.popleft()
        for w in t.adjacent(v):
            if w in seen or t.mark(v, w) is not Mark.ARROW:
                continue
            if not t.is_adjacent(w, c):
                return w
            if t.is_directed(w, c) and t.mark(w, v) is Mark.ARROW:
                seen.add(w)
                queue.append(w)
    return None


def _rule4(t: EndpointTable, sepsets: dict[Pair, frozenset[str]], unknown: set[Pair]) -> bool:
    changed = False
    for c in t.ids:
        for b in t.adjacent(c):
            if t.mark(b, c) is not Mark.CIRCLE:
                continue
            for a in t.adjacent(b):
                if a == c or not t.is_directed(a, c) or t.mark(a, b) is not Mark.ARROW:
                    continue
                theta = _discriminating_start(t, a, b, c)
                if theta is None:
                    continue
                pair = frozenset((theta, c))
                if pair in unknown:
                    continue
                if b in sepsets.get(pair, frozenset()):
                    changed = _update(t, b, c, Mark.TAIL) or changed
                    changed = _update(t, c, b, Mark.ARROW) or changed
                else:
                    changed = _update(t, b, a, Mark.ARROW) or changed
                    changed = _update(t, b, c, Mark.ARROW) or changed
                    changed = _update(t, c, b, Mark.ARROW) or changed
                break
    return changed


def _partially_directed_step(t: EndpointTable, u: str, w: str) -> bool:
    return t.mark(u, w) is not Mark.ARROW and t.mark(w, u) is not Mark.TAIL


def _uncovered_pd_path(t: EndpointTable, start: list[str], goal: str) -> bool:
    """Whether ``start`` extends to an uncovered potentially directed path ending at goal."""
    remaining = [PATH_SEARCH_LIMIT]

    def extend(path: list[str]) -> bool:
        u = path[-1]
        if u == goal:
            return True
        remaining[0] -= 1
        if remaining[0] <= 0:
            return False
        for w in t.adjacent(u):
            if w in path or not _partially_directed_step(t, u, w):
                continue
            if len(path) >= 2 and t.is_adjacent(path[-2], w):
                continue
            path.append(w)
            if extend(path):
                return True
            path.pop()
        return False

    return extend(list(start))


def _circle_arrows(t: EndpointTable) -> list[tuple[str, str]]:
    return [
        (a, c)
        for a in t.ids
        for c in t.adjacent(a)
        if t.mark(a, c) is Mark.CIRCLE and t.mark(c, a) is Mark.ARROW
    ]


def _rule8(t: EndpointTable) -> bool:
    changed = False
    for a, c in _circle_arrows(t):
        for b in t.adjacent(a):
            if b == c or not t.is_adjacent(b, c) or not t.is_directed(b, c):
                continue
            if t.mark(a, b) is Mark.TAIL and t.mark(b, a) in (Mark.ARROW, Mark.CIRCLE):
                changed = _update(t, a, c, Mark.TAIL) or changed
                break
    return changed


def _rule9(t: EndpointTable) -> bool:
    changed = False
    for a, c in _circle_arrows(t):
        if t.mark(a, c) is not Mark.CIRCLE:
            continue
        for b in t.adjacent(a):
            if b == c or t.is_adjacent(b, c) or not _partially_directed_step(t, a, b):
                continue
            if _uncovered_pd_path(t, [a, b], c):
                changed = _update(t, a, c, Mark.TAIL) or changed
                break
    return changed


def _first_steps(t: EndpointTable, a: str, goal: str) -> set[str]:
    steps = set()
    for mu in t.adjacent(a):
        if not _partially_directed_step(t, a, mu):
            continue
        if mu == goal or _uncovered_pd_path(t, [a, mu], goal):
            steps.add(mu)
    return steps


def _rule10(t: EndpointTable) -> bool:
    changed = False
    for a, c in _circle_arrows(t):
        if t.mark(a, c) is not Mark.CIRCLE:
            continue
        parents = [v for v in t.adjacent(c) if v != a and t.is_directed(v, c)]
        hit = False
        for b, theta in combinations(parents, 2):
            for mu in _first_steps(t, a, b):
                for omega in _first_steps(t, a, theta):
                    if mu != omega and not t.is_adjacent(mu, omega):
                        hit = True
                        break
                if hit:
                    break
            if hit:
                break
        if hit:
            changed = _update(t, a, c, Mark.TAIL) or changed
    return changed


def fci_closure(t: EndpointTable, state: SkeletonState) -> EndpointTable:
    """Apply orientation rules 1-4 and 8-10 in place until nothing changes."""
    rounds = 0
    while True:
        rounds += 1
        changed = _rule1(t)
        changed = _rule2(t) or changed
        changed = _rule3(t) or changed
        changed = _rule4(t, state.sepsets, state.unknown) or changed
        if changed:
            continue
        changed = _rule8(t)
        changed = _rule9(t) or changed
        changed = _rule10(t) or changed
        if not changed:
            logger.debug("fci closure settled after %d rounds", rounds)
            return t


def run_fci(
    d: Dataset | None,
    cfg: ClConfig,
    ci: ConditionalIndependenceTest | None = None,
) -> MixedGraph:
    """FCI without selection bias; returns a PAG."""
    test, nodes = resolve_inputs(d, cfg, ci)
    state = build_skeleton(nodes, test, cfg)
    t = state.table
    oracle = IndependenceOracle(test, cfg.alpha)
    _reset_circles(t)
    _orient_colliders(t, state)
    removed = _possible_dsep_pass(state, oracle, cfg.max_cond_size)
    logger.info("possible-d-sep pass removed %d edges", removed)
    _reset_circles(t)
    if cfg.knowledge is not None:
        _apply_knowledge(t, cfg.knowledge)
    _orient_colliders(t, state)
    fci_closure(t, state)
    return t.to_graph(GraphKind.PAG)
