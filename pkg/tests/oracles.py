"""Independent reference implementations used by the tests.

Nothing here imports from ``bridgeflow``: every value is recomputed from
plain arithmetic so the tests compare two separate transcriptions.
"""
from __future__ import annotations

import itertools


# ------------------------------------------------------------------ min/max tree
# Expressions are nested tuples ("min", e1, e2, ...), ("max", ...), ("mul", a, b),
# ("neg", e) or a bare number. Evaluation enumerates the branches of every
# min/max node: the selected branch is the one argument that is <= (>=) all of
# its siblings, ties resolved by first occurrence.


def evaluate(node) -> float:
    if isinstance(node, (int, float)):
        return float(node)
    op, *args = node
    if op == "neg":
        return -evaluate(args[0])
    if op == "mul":
        return evaluate(args[0]) * evaluate(args[1])
    values = [evaluate(a) for a in args]
    for i, v in enumerate(values):
        others = values[:i] + values[i + 1:]
        if op == "min" and all(v <= o for o in others):
            return v
        if op == "max" and all(v >= o for o in others):
            return v
    raise AssertionError(f"no branch selected for {op}{tuple(values)}")


def indicator_case(x: float) -> float:
    """The two-case indicator: 1 for x >= 0, 0 otherwise."""
    if x >= 0:
        return 1.0
    return 0.0


def simple_trees(out_p, out_q, send_p, send_q, recv_p, recv_q, cap_pq, cap_qp):
    pq = (
        ("min", ("max", ("min", out_p, recv_q), 0.0), cap_pq),
        ("max", ("min", ("max", out_p, ("neg", send_q)), 0.0), ("neg", cap_qp)),
    )
    qp = (
        ("min", ("max", ("min", out_q, recv_p), 0.0), cap_qp),
        ("max", ("min", ("max", out_q, ("neg", send_p)), 0.0), ("neg", cap_pq)),
    )
    return pq, qp


def delta_trees(out_p, out_q, send_p, send_q, recv_p, recv_q, cap_pq, cap_qp):
    _, second_pq = simple_trees(out_p, out_q, send_p, send_q, recv_p, recv_q, cap_pq, cap_qp)[0]
    _, second_qp = simple_trees(out_p, out_q, send_p, send_q, recv_p, recv_q, cap_pq, cap_qp)[1]
    first_pq = (
        "min",
        ("max", ("min", ("mul", ("max", out_p, ("neg", out_q)), indicator_case(out_p)),
                 recv_q, send_p), 0.0),
        cap_pq,
    )
    first_qp = (
        "min",
        ("max", ("min", ("mul", ("max", out_q, ("neg", out_p)), indicator_case(out_q)),
                 recv_p, send_q), 0.0),
        cap_qp,
    )
    return (first_pq, second_pq), (first_qp, second_qp)


def simple_oracle(*args) -> tuple[float, float]:
    pq, qp = simple_trees(*args)
    return sum(evaluate(t) for t in pq), sum(evaluate(t) for t in qp)


def delta_oracle(*args) -> tuple[float, float]:
    pq, qp = delta_trees(*args)
    return sum(evaluate(t) for t in pq), sum(evaluate(t) for t in qp)


def band_quantities(total, lo, hi):
    """(outside, send, receive) spelled out case by case."""
    if total < lo:
        outside = total - lo
    elif total > hi:
        outside = total - hi
    else:
        outside = 0.0
    send = total - lo if total > lo else 0.0
    receive = hi - total if hi > total else 0.0
    return outside, send, receive


# ------------------------------------------------------------------ full transcription


def transcribe_two_network(
    curr_p, tbd_p, curr_q, tbd_q, cap_pq, cap_qp, assets, max_stretch=0.2,
    min_weight=0.0, max_weight=1.0,
):
    """Step-by-step two-network calculation.

    ``assets`` is a list of ``(raw_min, raw_max, on_p, on_q)``.
    Returns a dict with the intermediate and final quantities.
    """
    def ratio(tbd, curr):
        if curr == 0 and tbd == 0:
            return 0.0
        return tbd / curr

    diff = abs(ratio(tbd_p, curr_p) - ratio(tbd_q, curr_q))
    raw = diff * (1 + (tbd_p + tbd_q) / (curr_p + curr_q + cap_pq))
    stretch = abs(raw) if abs(raw) < max_stretch else max_stretch

    tot_p = curr_p + tbd_p
    tot_q = curr_q + tbd_q
    grand = tot_p + tot_q
    min_p = max_p = min_q = max_q = 0.0
    for lo, hi, on_p, on_q in assets:
        s_lo = lo * (1 - stretch)
        s_hi = hi * (1 + stretch)
        if on_p and on_q:
            denom = tot_p + tot_q
            w = tot_p / denom if denom != 0 else 0.5
            w = max_weight if w > max_weight else (min_weight if w < min_weight else w)
            share_p, share_q = w, 1 - w
        else:
            share_p = 1.0 if on_p else 0.0
            share_q = 1.0 if on_q else 0.0
        min_p += s_lo * share_p
        max_p += s_hi * share_p
        min_q += s_lo * share_q
        max_q += s_hi * share_q
    band_p = (grand * min_p, grand * max_p)
    band_q = (grand * min_q, grand * max_q)
    out_p, send_p, recv_p = band_quantities(tot_p, *band_p)
    out_q, send_q, recv_q = band_quantities(tot_q, *band_q)
    args = (out_p, out_q, send_p, send_q, recv_p, recv_q, cap_pq, cap_qp)
    simple = simple_oracle(*args)
    delta = delta_oracle(*args)
    return {
        "diff": diff,
        "raw_stretch": raw,
        "stretch": stretch,
        "band_p": band_p,
        "band_q": band_q,
        "outside": (out_p, out_q),
        "send": (send_p, send_q),
        "receive": (recv_p, recv_q),
        "simple": simple,
        "delta": delta,
    }


# ------------------------------------------------------------------ routing


def enumerate_matching_orders(surplus: dict, caps: dict):
    """Outcome of visiting every pair once, for every visiting order.

    ``surplus`` maps network -> signed excess (negative = deficit); a pair
    moves ``min(excess of one, deficit of the other, directed capacity)``.
    Returns ``{order: (transfers, final_surplus)}``.
    """
    nets = sorted(surplus)
    pairs = list(itertools.combinations(nets, 2))
    outcomes = {}
    for order in itertools.permutations(pairs):
        s = dict(surplus)
        moves = []
        for a, b in order:
            if s[a] > 0 and s[b] < 0:
                src, dst = a, b
            elif s[b] > 0 and s[a] < 0:
                src, dst = b, a
            else:
                continue
            amount = min(s[src], -s[dst], caps[(src, dst)])
            if amount > 0:
                moves.append((src, dst, amount))
                s[src] -= amount
                s[dst] += amount
        outcomes[order] = (moves, s)
    return outcomes
