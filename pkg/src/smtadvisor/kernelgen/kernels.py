"""Synthetic latency-critical kernels.

Each generator builds its data structure in a simulated address space,
then walks it once per task inside a single annotated region. Block
layouts follow one convention: the last op of every block yields the
pointer (or index) the next block starts from, and the first op of a
walk block depends on it at distance 1.
"""

from __future__ import annotations

import math
from typing import Any, Callable

from .base import Builder, alu, br, div, fadd, fmul, ld, st

# name: (full-scale default, desk default, minimum)
PARAMS: dict[str, dict[str, tuple[Any, Any, Any]]] = {
    "GEOSPATIAL": {
        "objects": (2048, 2048, 1),
        "queries": (15, 15, 2),
        "extent": (1000, 1000, 1),
        "query_size": (50, 50, 1),
        "max_results": (32, 32, 1),
    },
    "VWAP": {
        "price_levels": (100, 100, 2),
        "skip_levels": (4, 4, 1),
        "window": (32, 32, 2),
        "trades": (30, 30, 2),
        "orders_min": (2, 2, 1),
        "orders_max": (10, 10, 1),
    },
    "LIDAR": {
        "obstacles": (1000, 1000, 1),
        "volume": (60.0, 60.0, 1.0),
        "waypoints": (100, 100, 2),
        "spacing": (0.2, 0.2, 0.001),
    },
    "TIMELINE": {
        "accounts": (1000, 40, 2),
        "follows_min": (64, 4, 1),
        "follows_max": (192, 12, 1),
        "posts_min": (16, 2, 1),
        "posts_max": (80, 10, 1),
        "reactions_min": (5, 1, 0),
        "reactions_max": (25, 5, 0),
        "post_cap": (8, 8, 1),
    },
    "RF": {
        "trees": (256, 8, 2),
        "depth": (5, 5, 1),
        "features": (32, 32, 1),
    },
    "ONEHOP": {
        "nodes": (200000, 2000, 2),
        "degree": (256, 32, 2),
        "features": (64, 64, 16),
        "chunk": (1, 1, 1),
    },
    "LOB": {
        "symbols": (256, 16, 2),
        "updates": (500, 32, 1),
        "initial_levels": (16, 16, 1),
    },
    "GEOIP": {
        "prefixes": (8192, 1024, 1),
        "lookups": (1000000, 10000, 2),
        "min_prefix": (8, 8, 1),
        "max_prefix": (24, 24, 1),  # capped at 31 so a walk visits at most 32 nodes
    },
    "FRAUD": {
        "vertices": (100000, 1000, 8),
        "edges": (300000, 3000, 1),
        "tested": (1000, 20, 2),
        "hub_fanin": (60000, 600, 1),
        "burst": (0.5, 0.5, 0.0),
        "fanin": (5, 5, 2),
    },
    "BVH": {
        "points": (200000, 2000, 8),
        "trajectory": (10000, 100, 2),
        "extent": (1000.0, 1000.0, 1.0),
        "radius": (2.0, 2.0, 0.0),
        "leaf_size": (4, 4, 1),
    },
}

# desk count divisor per kind, relative to the full-scale defaults
DESK_DIVISORS: dict[str, dict[str, float]] = {
    "GEOSPATIAL": {},
    "VWAP": {},
    "LIDAR": {},
    "TIMELINE": {"accounts": 25, "follows": 16, "posts": 8, "reactions": 5},
    "RF": {"trees": 32},
    "ONEHOP": {"nodes": 100, "degree": 8},
    "LOB": {"symbols": 16, "updates": 15.625},
    "GEOIP": {"prefixes": 8, "lookups": 100},
    "FRAUD": {"vertices": 100, "edges": 100, "tested": 50, "hub_fanin": 100},
    "BVH": {"points": 100, "trajectory": 100},
}

# paired bounds: (low, high) must satisfy low <= high
_RANGES = {
    "VWAP": [("orders_min", "orders_max")],
    "TIMELINE": [
        ("follows_min", "follows_max"),
        ("posts_min", "posts_max"),
        ("reactions_min", "reactions_max"),
    ],
    "GEOIP": [("min_prefix", "max_prefix")],
}


# ---------------------------------------------------------------- GEOSPATIAL


def _kd_build(points: list[tuple], idx: list[int], depth: int, dims: int, out: dict) -> int | None:
    """Median-split KD-tree; returns the root point index, children in ``out``."""
    if not idx:
        return None
    axis = depth % dims
    idx = sorted(idx, key=lambda i: (points[i][axis], i))
    mid = len(idx) // 2
    node = idx[mid]
    left = _kd_build(points, idx[:mid], depth + 1, dims, out)
    right = _kd_build(points, idx[mid + 1 :], depth + 1, dims, out)
    out[node] = (axis, left, right)
    return node


def _bst_insert(tree: dict, root: int | None, key: int) -> int:
    if root is None:
        tree[key] = [None, None]
        return key
    node = root
    while True:
        side = 0 if key < node else 1
        child = tree[node][side]
        if child is None:
            tree[node][side] = key
            tree[key] = [None, None]
            return root
        node = child


def geospatial(b: Builder, p: dict) -> None:
    rng = b.rng
    n, extent, size = p["objects"], p["extent"], p["query_size"]
    pts = [(rng.uniform(0, extent), rng.uniform(0, extent)) for _ in range(n)]
    kd: dict = {}
    kd_root = _kd_build(pts, list(range(n)), 0, 2, kd)
    bst: dict = {}
    bst_root = None
    for key in rng.sample(range(n), n):
        bst_root = _bst_insert(bst, bst_root, key)
    metrics = [rng.randint(1, 4) for _ in range(n)]
    n_metrics = sum(metrics)

    globals_ = b.alloc("geo_roots", 16)
    queries = b.alloc("queries", p["queries"] * 32)
    kd_nodes = b.pool("kd_nodes", n, 64)
    bst_nodes = b.pool("meta_bst", n, 64)
    metric_nodes = b.pool("metric_lists", n_metrics, 16)
    results = b.alloc("query_results", p["queries"] * 8)
    first_metric, acc = [], 0
    for m in metrics:
        first_metric.append(acc)
        acc += m

    b_query = b.block([alu(), ld(32, 1), alu(1), ld(8), alu(1), alu(3), br(1), alu(4)])
    b_kd = b.block(
        [ld(32, 1), fadd(1), fadd(2), alu(1, 2), br(1), alu(5), br(1), alu(7, 2)]
    )
    b_bst = b.block([ld(32, 1), alu(1), br(1), alu(3), alu(1), br(1), alu(6, 2)])
    b_metric = b.block([ld(16, 1), fadd(1), fmul(2), fadd(1), br(1), alu(5)])
    b_end = b.block([fadd(), alu(), st(8, 1, 2), br(1), alu()])
    rid = b.region("range_query_batch", b_query, "geo/query_engine.c", (212, 268))

    cap = p["max_results"]
    for q in range(p["queries"]):
        x0, y0 = rng.uniform(0, extent - size), rng.uniform(0, extent - size)
        lo, hi = (x0, y0), (x0 + size, y0 + size)
        b.enter(rid)
        b.exec(b_query, queries + 32 * q, globals_)
        found: list[int] = []
        stack = [kd_root]
        while stack and len(found) < cap:
            node = stack.pop()
            b.exec(b_kd, kd_nodes[node])
            pt = pts[node]
            if lo[0] <= pt[0] <= hi[0] and lo[1] <= pt[1] <= hi[1]:
                found.append(node)
            axis, left, right = kd[node]
            if right is not None and hi[axis] >= pt[axis]:
                stack.append(right)
            if left is not None and lo[axis] <= pt[axis]:
                stack.append(left)
        for obj in found:
            node = bst_root
            while True:
                b.exec(b_bst, bst_nodes[node])
                if node == obj:
                    break
                node = bst[node][0 if obj < node else 1]
            for k in range(metrics[obj]):
                b.exec(b_metric, metric_nodes[first_metric[obj] + k])
        b.exec(b_end, results + 8 * q)
        b.leave(rid)


# ---------------------------------------------------------------------- VWAP


def vwap(b: Builder, p: dict) -> None:
    rng = b.rng
    n_levels, height = p["price_levels"], p["skip_levels"]
    heights = []
    for _ in range(n_levels):
        h = 1
        while h < height and rng.random() < 0.5:
            h += 1
        heights.append(h)
    orders = [rng.randint(p["orders_min"], p["orders_max"]) for _ in range(n_levels)]
    n_orders = sum(orders)
    window = p["window"]

    head = b.alloc("skiplist_head", 64)
    trades = b.alloc("trades", p["trades"] * 16)
    levels = b.pool("skiplist_levels", n_levels, 64)
    order_nodes = b.pool("order_lists", n_orders, 32)
    ring = b.alloc("tick_ring", window * 16)
    results = b.alloc("vwap_results", p["trades"] * 8)
    first_order, acc = [], 0
    for m in orders:
        first_order.append(acc)
        acc += m

    # forward links per level, including the head (index -1)
    fwd: dict[int, list[int | None]] = {-1: [None] * height}
    last = [-1] * height
    for i in range(n_levels):
        fwd[i] = [None] * height
        for lvl in range(heights[i]):
            fwd[last[lvl]][lvl] = i
            last[lvl] = i

    b_trade = b.block([alu(), ld(16, 1), alu(1), ld(8), alu(1), br(1), alu(3)])
    b_skip = b.block([ld(32, 1), alu(1), br(1), alu(2), br(1), alu(3, 5)])
    b_order = b.block([ld(32, 1), fadd(1), alu(2), br(1), alu(4)])
    b_tick = b.block([alu(1), alu(1), ld(32, 1), fmul(1), fadd(1), fadd(3), br(1), alu(7)])
    b_end = b.block([div(), fadd(1), alu(), st(8, 1, 3), alu()])
    rid = b.region("vwap_update_batch", b_trade, "hft/vwap.c", (88, 131))

    for t in range(p["trades"]):
        level = rng.randrange(n_levels)
        b.enter(rid)
        b.exec(b_trade, trades + 16 * t, head)
        node = -1
        for lvl in range(height - 1, -1, -1):
            while True:
                nxt = fwd[node][lvl]
                if nxt is None:
                    break
                b.exec(b_skip, levels[nxt])
                if nxt > level:
                    break
                node = nxt
                if nxt == level:
                    break
            if node == level:
                break
        for k in range(orders[level]):
            b.exec(b_order, order_nodes[first_order[level] + k])
        start = rng.randrange(window)
        for k in range(0, window, 2):
            slot = (start + k) % window
            slot -= slot % 2
            b.exec(b_tick, ring + 16 * slot)
        b.exec(b_end, results + 8 * t)
        b.leave(rid)


# --------------------------------------------------------------------- LIDAR


def lidar(b: Builder, p: dict) -> None:
    rng = b.rng
    n, vol = p["obstacles"], p["volume"]
    pts = [tuple(rng.uniform(0, vol) for _ in range(3)) for _ in range(n)]
    kd: dict = {}
    root = _kd_build(pts, list(range(n)), 0, 3, kd)

    globals_ = b.alloc("kd_root", 8)
    waypoints = b.alloc("waypoints", p["waypoints"] * 16)
    nodes = b.pool("kd_nodes", n, 64)
    results = b.alloc("min_distances", p["waypoints"] * 8)

    b_way = b.block([alu(), ld(16, 1), alu(1), ld(8), alu(1), br(1), alu(3)])
    b_node = b.block(
        [
            ld(32, 1), fadd(1), fadd(2), fadd(3), fmul(3), fmul(3), fmul(3),
            fadd(3, 2), fadd(1, 2), alu(1), br(1), alu(11, 2),
        ]
    )
    b_end = b.block([fadd(), alu(), st(8, 1, 2), br(1), alu()])
    rid = b.region("trajectory_clearance", b_way, "av/lidar_nn.c", (140, 187))

    # straight path through the volume, clipped to stay inside it
    length = p["spacing"] * (p["waypoints"] - 1)
    margin = min(length / 2, vol / 2)
    start = [rng.uniform(margin, vol - margin) for _ in range(3)]
    d = [rng.gauss(0, 1) for _ in range(3)]
    norm = math.sqrt(sum(x * x for x in d)) or 1.0
    d = [x / norm for x in d]

    for w in range(p["waypoints"]):
        q = tuple(min(vol, max(0.0, start[i] + d[i] * (w * p["spacing"] - length / 2))) for i in range(3))
        b.enter(rid)
        b.exec(b_way, waypoints + 16 * w, globals_)
        best = [math.inf]

        def visit(node: int | None) -> None:
            if node is None:
                return
            b.exec(b_node, nodes[node])
            pt = pts[node]
            dist = sum((pt[i] - q[i]) ** 2 for i in range(3))
            best[0] = min(best[0], dist)
            axis, left, right = kd[node]
            diff = q[axis] - pt[axis]
            near, far = (left, right) if diff < 0 else (right, left)
            visit(near)
            if diff * diff < best[0]:
                visit(far)

        visit(root)
        b.exec(b_end, results + 8 * w)
        b.leave(rid)


# ------------------------------------------------------------------ TIMELINE


def timeline(b: Builder, p: dict) -> None:
    rng = b.rng
    n = p["accounts"]
    follows = []
    for a in range(n):
        k = min(rng.randint(p["follows_min"], p["follows_max"]), n - 1)
        follows.append(rng.sample([x for x in range(n) if x != a], k))
    posts = [rng.randint(p["posts_min"], p["posts_max"]) for _ in range(n)]
    n_posts = sum(posts)
    cap = p["post_cap"]

    accounts = b.pool("accounts", n, 64)
    follow_arrays = [b.alloc(f"follows_{a}", 4 * len(follows[a])) for a in range(n)]
    post_nodes = b.pool("posts", n_posts, 64)
    feeds = b.alloc("feeds", n * cap * 8)
    first_post, acc = [], 0
    for m in posts:
        first_post.append(acc)
        acc += m

    b_view = b.block([alu(), ld(16, 1), alu(1), br(1), alu(3)])
    b_follow = b.block([alu(1), ld(4, 1), alu(1), ld(16, 1), br(1), alu(2)])
    b_post = b.block([ld(32, 1), alu(1), fmul(1), fmul(1, 3), br(1), st(8, 2), alu(6)])
    b_end = b.block([alu(), st(8, 1), br(1), alu()])
    rid = b.region("build_feeds", b_view, "social/timeline.c", (301, 362))

    for v in range(n):
        feed = feeds + v * cap * 8
        b.enter(rid)
        b.exec(b_view, accounts[v])
        kept = 0
        for j, f in enumerate(follows[v]):
            b.exec(b_follow, follow_arrays[v] + 4 * j, accounts[f])
            for k in range(min(posts[f], cap)):
                slot = min(kept, cap - 1)
                b.exec(b_post, post_nodes[first_post[f] + k], feed + 8 * slot)
                kept += 1
        b.exec(b_end, feed)
        b.leave(rid)


# ------------------------------------------------------------------------ RF


def rf(b: Builder, p: dict) -> None:
    rng = b.rng
    trees, depth, nf = p["trees"], p["depth"], p["features"]
    internal = 2**depth - 1
    leaves = 2**depth

    roots = b.alloc("tree_roots", trees * 8)
    features = b.alloc("feature_vector", nf * 4)
    inner = [b.pool(f"tree{t}_nodes", internal, 64) for t in range(trees)]
    leaf = [b.pool(f"tree{t}_leaves", leaves, 64) for t in range(trees)]
    votes = b.alloc("tree_votes", trees * 8)
    x = [rng.random() for _ in range(nf)]

    # op 13 of a node block loads the child pointer the next block starts from;
    # missing-value handling and the default-direction flag sit on the same chain
    # a tree starts only after the early-exit check on the running margin
    b_tree = b.block([alu(1), br(1), alu(2), ld(8, 1), alu(1), alu(2)])
    b_node = b.block(
        [
            ld(16, 1), alu(1), alu(1), ld(4, 1), alu(1), br(1), fadd(3, 6), alu(1),
            alu(8), alu(1, 5), alu(1, 3), alu(1), alu(12, 1), ld(8, 1), alu(1), br(1),
            alu(), alu(1), br(1), alu(6),
        ]
    )
    b_leaf = b.block([ld(8, 1), fadd(1), alu(), st(8, 1, 2), fadd(3), br(1), alu(2)])
    rid = b.region("forest_predict", b_tree, "ml/forest.c", (57, 94))

    for t in range(trees):
        feat = [rng.randrange(nf) for _ in range(internal)]
        thr = [rng.random() for _ in range(internal)]
        b.enter(rid)
        b.exec(b_tree, roots + 8 * t)
        node = 0
        for _ in range(depth):
            addr = inner[t][node]
            b.exec(b_node, addr, features + 4 * feat[node], addr + 16)
            node = 2 * node + (1 if x[feat[node]] > thr[node] else 2)
        b.exec(b_leaf, leaf[t][node - internal], votes + 8 * t)
        b.leave(rid)


# -------------------------------------------------------------------- ONEHOP


def onehop(b: Builder, p: dict) -> None:
    rng = b.rng
    n, degree, nf, chunk = p["nodes"], p["degree"], p["features"], p["chunk"]
    neighbors = rng.sample(range(1, n), min(degree, n - 1))
    row_bytes = -(-nf * 4 // 64) * 64

    adjacency = b.alloc("adjacency_0", 4 * len(neighbors))
    feature_rows = b.alloc("node_features", n * row_bytes)
    partials = b.alloc("partial_embeddings", -(-len(neighbors) // chunk) * 64)

    b_nbr = b.block([alu(), ld(4, 1), alu(1), br(1), alu(2)])
    b_feat = b.block([alu(1), ld(64, 1), fadd(1), br(1), alu(4)])
    b_end = b.block([fadd(), st(64, 1), br(1), alu()])
    rid = b.region("aggregate_neighbors", b_nbr, "gnn/onehop.c", (44, 71))

    for c in range(0, len(neighbors), chunk):
        b.enter(rid)
        for j in range(c, min(c + chunk, len(neighbors))):
            b.exec(b_nbr, adjacency + 4 * j)
            row = feature_rows + neighbors[j] * row_bytes
            for off in range(0, row_bytes, 64):
                b.exec(b_feat, row + off)
        b.exec(b_end, partials + 64 * (c // chunk))
        b.leave(rid)


# ----------------------------------------------------------------------- LOB


def lob(b: Builder, p: dict) -> None:
    rng = b.rng
    n_sym, updates, init = p["symbols"], p["updates"], p["initial_levels"]
    ticks = 100  # $100.00 .. $100.99 in cents
    init = min(init, ticks)
    capacity = n_sym * (init + 2 * updates)

    books = b.alloc("book_heads", n_sym * 8)
    msgs = b.alloc("update_messages", n_sym * updates * 16)
    free_head = b.alloc("free_list_head", 8)
    nodes = b.pool("order_pool", capacity, 32)

    b_update = b.block([alu(), ld(16, 1), alu(1), ld(8, 1), br(1), alu(2)])
    b_level = b.block([ld(32, 1), alu(1), br(1), alu(3)])
    b_alloc = b.block([ld(8), ld(8, 1), st(8, 1), st(32, 3), st(8, 4), alu(5)])
    rid = b.region("apply_book_updates", b_update, "hft/lob.c", (120, 190))

    next_free = 0
    for s in range(n_sym):
        prices = sorted(rng.sample(range(ticks), init))
        level_node = {}
        for price in prices:
            level_node[price] = next_free
            next_free += 1
        b.enter(rid)
        for u in range(updates):
            price = rng.randrange(ticks)
            b.exec(b_update, msgs + 16 * (s * updates + u), books + 8 * s)
            for lp in prices:
                b.exec(b_level, nodes[level_node[lp]])
                if lp >= price:
                    break
            if price not in level_node:
                node = next_free
                next_free += 1
                b.exec(b_alloc, free_head, nodes[node], free_head, nodes[node], nodes[node])
                level_node[price] = node
                prices = sorted(prices + [price])
            order = next_free
            next_free += 1
            b.exec(b_alloc, free_head, nodes[order], free_head, nodes[order], nodes[level_node[price]])
        b.leave(rid)


# --------------------------------------------------------------------- GEOIP


def geoip(b: Builder, p: dict) -> None:
    rng = b.rng
    lo_len, hi_len = p["min_prefix"], p["max_prefix"]
    prefixes = []
    for _ in range(p["prefixes"]):
        length = rng.randint(lo_len, hi_len)
        prefixes.append((rng.getrandbits(length), length))
    # trie nodes keyed by (bits, length); root is (0, 0)
    trie = {(0, 0)}
    for bits, length in prefixes:
        for k in range(1, length + 1):
            trie.add((bits >> (length - k), k))
    order = sorted(trie, key=lambda t: (t[1], t[0]))
    index = {key: i for i, key in enumerate(order)}

    root = b.alloc("trie_root", 8)
    ips = b.alloc("lookup_addresses", p["lookups"] * 4)
    nodes = b.pool("trie_nodes", len(order), 16)
    results = b.alloc("lookup_regions", p["lookups"] * 4)

    b_ip = b.block([alu(), ld(4, 1), alu(1), ld(8), br(1), alu(2)])
    b_node = b.block([ld(16, 1), alu(1), alu(1), alu(1, 3), br(1), alu(2)])
    b_end = b.block([alu(), st(4, 1), br(1), alu()])
    rid = b.region("geolocate_batch", b_ip, "net/geoip.c", (66, 103))

    for i in range(p["lookups"]):
        bits, length = prefixes[rng.randrange(len(prefixes))]
        ip = (bits << (32 - length)) | rng.getrandbits(32 - length)
        b.enter(rid)
        b.exec(b_ip, ips + 4 * i, root)
        depth = 0
        while True:
            b.exec(b_node, nodes[index[(ip >> (32 - depth), depth) if depth else (0, 0)]])
            if depth == 32:
                break
            child = (ip >> (31 - depth), depth + 1)
            if child not in index:
                break
            depth += 1
        b.exec(b_end, results + 4 * i)
        b.leave(rid)


# --------------------------------------------------------------------- FRAUD


def fraud(b: Builder, p: dict) -> None:
    rng = b.rng
    nv, ne, tested = p["vertices"], p["edges"], p["tested"]
    hub_fanin = min(p["hub_fanin"], nv - 1)
    hub = rng.randrange(nv)
    in_edges: dict[int, list[int]] = {}
    for src in rng.sample([v for v in range(nv) if v != hub], hub_fanin):
        in_edges.setdefault(hub, []).append(src)
    for _ in range(ne):
        in_edges.setdefault(rng.randrange(nv), []).append(rng.randrange(nv))
    n_edges = sum(len(v) for v in in_edges.values())
    burst = int(round(tested * p["burst"]))

    vertices = b.pool("vertex_records", nv, 16)
    tested_edges = b.alloc("tested_edges", tested * 16)
    edge_nodes = b.pool("in_edge_lists", n_edges, 16)
    flags = b.alloc("motif_flags", tested * 8)
    first, acc = {}, 0
    for v in sorted(in_edges):
        first[v] = acc
        acc += len(in_edges[v])

    b_edge = b.block([alu(), ld(16, 1), alu(1), ld(16, 1), br(1), alu(2)])
    b_scan = b.block([ld(16, 1), alu(1), alu(1), br(1), alu(2), alu(5)])
    b_end = b.block([alu(), alu(1), st(8, 1), br(2), alu()])
    rid = b.region("test_fanin_motifs", b_edge, "graph/fraud.c", (150, 204))

    # a burst of transfers into one hub account arrives first in the batch
    light = [v for v in range(nv) if v != hub and len(in_edges.get(v, ())) < p["fanin"] - 1]
    for t in range(tested):
        target = hub if t < burst else rng.choice(light)
        b.enter(rid)
        b.exec(b_edge, tested_edges + 16 * t, vertices[target])
        if len(in_edges.get(target, ())) >= p["fanin"] - 1:
            for k in range(len(in_edges[target])):
                b.exec(b_scan, edge_nodes[first[target] + k])
        b.exec(b_end, flags + 8 * t)
        b.leave(rid)


# ----------------------------------------------------------------------- BVH


def _bvh_build(pts: list, idx: list[int], leaf: int, out: list) -> int:
    """8-wide BVH from three nested median splits; returns node id."""
    node = len(out)
    out.append(None)
    if len(idx) <= leaf:
        out[node] = ("leaf", idx)
        return node
    groups = [idx]
    for axis in range(3):
        nxt = []
        for g in groups:
            g = sorted(g, key=lambda i: (pts[i][axis], i))
            half = len(g) // 2
            nxt.extend(part for part in (g[:half], g[half:]) if part)
        groups = nxt
    children = []
    for g in groups:
        lo = tuple(min(pts[i][a] for i in g) for a in range(3))
        hi = tuple(max(pts[i][a] for i in g) for a in range(3))
        children.append((lo, hi, _bvh_build(pts, g, leaf, out)))
    out[node] = ("inner", children)
    return node


def bvh(b: Builder, p: dict) -> None:
    rng = b.rng
    n, ext, r = p["points"], p["extent"], p["radius"]
    pts = [tuple(rng.uniform(0, ext) for _ in range(3)) for _ in range(n)]
    tree: list = []
    root = _bvh_build(pts, list(range(n)), p["leaf_size"], tree)

    root_ptr = b.alloc("bvh_root", 8)
    traj = b.alloc("trajectory", p["trajectory"] * 16)
    node_bytes = 64 * max(1, -(-p["leaf_size"] * 16 // 64))
    nodes = b.pool("bvh_nodes", len(tree), node_bytes)
    hits = b.alloc("collision_flags", p["trajectory"] * 4)

    b_point = b.block([ld(16), ld(8), alu(1)])
    b_inner = b.block([ld(64, 1), fadd(1), alu(1)])
    b_leaf = b.block([ld(64, 1), fmul(1), alu(1)])
    b_end = b.block([alu(), st(4, 1), alu()])
    rid = b.region("trajectory_collisions", b_point, "av/bvh_collide.c", (95, 138))

    start = [rng.uniform(0, ext) for _ in range(3)]
    d = [rng.gauss(0, 1) for _ in range(3)]
    norm = math.sqrt(sum(x * x for x in d)) or 1.0
    step = ext / (2 * p["trajectory"])
    for t in range(p["trajectory"]):
        q = [(start[i] + d[i] / norm * step * t) % ext for i in range(3)]
        b.enter(rid)
        b.exec(b_point, traj + 16 * t, root_ptr)
        stack = [root]
        while stack:
            node = stack.pop()
            kind, body = tree[node]
            if kind == "leaf":
                b.exec(b_leaf, nodes[node])
                continue
            b.exec(b_inner, nodes[node])
            for lo, hi, child in reversed(body):
                if all(lo[i] - r <= q[i] <= hi[i] + r for i in range(3)):
                    stack.append(child)
        b.exec(b_end, hits + 4 * t)
        b.leave(rid)


KERNELS: dict[str, tuple[Callable[[Builder, dict], None], int | None]] = {
    "GEOSPATIAL": (geospatial, 8),
    "VWAP": (vwap, 8),
    "LIDAR": (lidar, 12),
    "TIMELINE": (timeline, 8),
    "RF": (rf, 20),
    "ONEHOP": (onehop, 6),
    "LOB": (lob, 8),
    "GEOIP": (geoip, 6),
    "FRAUD": (fraud, 6),
    "BVH": (bvh, 4),
}
