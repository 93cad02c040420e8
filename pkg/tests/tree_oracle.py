"""Independent re-implementation of top-k selection plus exhaustive tree enumeration.

Written against the selection rule only: nothing here calls into the
package's scoring code.
"""

import functools
import math
import random

from profocus.mcts import SearchTree
from profocus.navgraph import NavGraph, Waypoint

# number of unlabeled rooted trees with n nodes, n = 1..12
ROOTED_TREE_COUNTS = (1, 1, 2, 4, 9, 20, 48, 115, 286, 719, 1842, 4766)


@functools.lru_cache(maxsize=None)
def rooted_trees(n):
    """Canonical shapes: a tree is the sorted tuple of its child subtrees."""
    if n == 1:
        return ((),)
    return tuple(sorted({tuple(sorted(f, reverse=True)) for f in _forests(n - 1, None)}))


def _forests(total, cap):
    # non-increasing sequences of subtrees whose sizes sum to total
    if total == 0:
        yield ()
        return
    for size in range(min(total, cap[0] if cap else total), 0, -1):
        for t in rooted_trees(size):
            if cap is not None and size == cap[0] and t > cap[1]:
                continue
            for rest in _forests(total - size, (size, t)):
                yield (t,) + rest


def shape_size(shape):
    return 1 + sum(shape_size(c) for c in shape)


def materialise(shape, seed):
    """Parent map, Q, N, and a graph whose edge weights are small integers."""
    rng = random.Random(seed)
    parent, children = {}, {}
    ids = []
    z = {}

    def walk(s, par):
        wid = f"v{len(ids):02d}"
        ids.append(wid)
        parent[wid] = par
        children[wid] = []
        z[wid] = 0 if par is None else z[par] + rng.choice((-1, 1)) * rng.randint(1, 4)
        if par is not None:
            children[par].append(wid)
        for c in s:
            walk(c, wid)

    walk(shape, None)
    q = {w: rng.choice((0.1, 0.3, 0.5, 0.7, 0.9)) for w in ids}
    n = {w: rng.randint(0, 3) for w in ids}
    edges = [(parent[w], w) for w in ids if parent[w] is not None]
    # a few shortcuts so graph distance differs from tree distance
    for _ in range(rng.randint(0, 3)):
        a, b = rng.sample(ids, 2) if len(ids) > 1 else (ids[0], ids[0])
        if a != b and z[a] != z[b] and (a, b) not in edges and (b, a) not in edges:
            edges.append((a, b))
    graph = NavGraph([Waypoint(w, (0.0, 0.0, float(z[w]))) for w in ids], edges)
    return ids, parent, children, q, n, graph


def build_tree(ids, parent, children, q, n):
    tree = SearchTree(ids[0], q[ids[0]])
    for w in ids:
        if children[w]:
            tree.expand(w, children[w], {c: q[c] for c in children[w]})
    for w in ids:
        tree.nodes[w].q_value = q[w]
        tree.nodes[w].visit_count = n[w]
    return tree


def all_pairs_distances(ids, graph):
    inf = math.inf
    d = {a: {b: (0.0 if a == b else inf) for b in ids} for a in ids}
    for a, b in graph.edges():
        w = abs(graph.position(a)[2] - graph.position(b)[2])
        d[a][b] = d[b][a] = w
    for k in ids:
        for i in ids:
            for j in ids:
                if d[i][k] + d[k][j] < d[i][j]:
                    d[i][j] = d[i][k] + d[k][j]
    return d


def oracle_top_k(ids, parent, children, q, n, dist, current, k, lam, cap, exclude=()):
    leaves = [w for w in ids if not children[w] and dist[current][w] < math.inf]
    if not leaves:
        return []
    max_d = max(dist[current][w] for w in leaves)
    rows = []
    for leaf in leaves:
        if leaf == current or leaf in exclude:
            continue
        path = []
        w = leaf
        while w is not None:
            path.append(w)
            w = parent[w]
        path.reverse()
        total = sum(n[w] + 1.0 for w in path)
        v = sum((n[w] + 1.0) * q[w] for w in path) / total
        d = dist[current][leaf]
        s = v if max_d <= 0 else v - lam * d / max_d
        rows.append((-s, -v, leaf, s))
    rows.sort()
    picked, per_parent = [], {}
    for _, neg_v, leaf, s in rows:
        if len(picked) == k:
            break
        p = parent[leaf]
        if per_parent.get(p, 0) >= cap:
            continue
        per_parent[p] = per_parent.get(p, 0) + 1
        picked.append((leaf, s, -neg_v, p))
    return picked
