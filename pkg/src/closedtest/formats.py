"""Reading inputs and rendering lattices as JSON, CSV and DOT."""

from __future__ import annotations

import csv
import io
import json
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from .closure import ClosureTable, HypothesisFamily, subset_indices, subset_mask
from .constraints import constrained_adjusted, distinct_closure
from .errors import ParseError
from .permutation import TwoGroupDataset


# -- input --------------------------------------------------------------------

def _rows(path):
    text = Path(path).read_text()
    return [(i, row) for i, row in enumerate(csv.reader(io.StringIO(text)), start=1)
            if row and any(c.strip() for c in row)]


def _float(value: str, line: int, what: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ParseError(f"{what} {value!r} is not a number", line) from None


def read_pvalues(path) -> HypothesisFamily:
    """Elementary p-values from a CSV with an ``id,p`` header."""
    rows = _rows(path)
    if not rows:
        raise ParseError("empty p-value file")
    line, header = rows[0]
    header = [h.strip().lower() for h in header]
    if "id" not in header or "p" not in header:
        raise ParseError("header must contain the columns 'id' and 'p'", line)
    i_id, i_p = header.index("id"), header.index("p")
    ids, ps = [], []
    for line, row in rows[1:]:
        if len(row) < len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", line)
        p = _float(row[i_p].strip(), line, "p-value")
        if not 0 <= p <= 1:
            raise ParseError(f"p-value {p} outside [0, 1]", line)
        ident = row[i_id].strip()
        if ident in ids:
            raise ParseError(f"duplicate id {ident!r}", line)
        ids.append(ident)
        ps.append(p)
    if not ps:
        raise ParseError("no p-values found")
    return HypothesisFamily(tuple(ps), tuple(ids))


def read_matrix(path) -> np.ndarray:
    """Dense numeric CSV; a leading non-numeric header row is skipped."""
    rows = _rows(path)
    if rows:
        try:
            [float(c) for c in rows[0][1]]
        except ValueError:
            rows = rows[1:]
    out = [[_float(c.strip(), line, "entry") for c in row] for line, row in rows]
    if not out or any(len(r) != len(out[0]) for r in out):
        raise ParseError("matrix rows must be nonempty and of equal length")
    return np.array(out)


def read_constraints(path, family: HypothesisFamily) -> HypothesisFamily:
    """Attach ``hypothesis_id,left_param,right_param`` edges to ``family``."""
    rows = _rows(path)
    if not rows:
        raise ParseError("empty constraint file")
    line, header = rows[0]
    header = [h.strip().lower() for h in header]
    need = ["hypothesis_id", "left_param", "right_param"]
    if any(h not in header for h in need):
        raise ParseError("header must be hypothesis_id,left_param,right_param", line)
    idx = [header.index(h) for h in need]
    edges = {}
    for line, row in rows[1:]:
        hid, left, right = (row[i].strip() for i in idx)
        if hid not in family.labels:
            raise ParseError(f"unknown hypothesis id {hid!r}", line)
        if hid in edges:
            raise ParseError(f"hypothesis {hid!r} listed twice", line)
        if left == right:
            raise ParseError("left and right parameter must differ", line)
        edges[hid] = (left, right)
    missing = [h for h in family.labels if h not in edges]
    if missing:
        raise ParseError(f"no constraint row for hypotheses {missing}")
    return HypothesisFamily(family.pvalues, family.labels, tuple(edges[h] for h in family.labels))


def read_dataset(path) -> TwoGroupDataset:
    """Two-group data: first column is the group label, the rest are variables."""
    rows = _rows(path)
    if not rows:
        raise ParseError("empty data file")
    labels = None
    try:
        [float(c) for c in rows[0][1][1:]]
    except ValueError:
        labels = tuple(c.strip() for c in rows[0][1][1:])
        rows = rows[1:]
    groups: dict[str, list[list[float]]] = {}
    width = None
    for line, row in rows:
        if width is None:
            width = len(row)
        if len(row) != width or width < 2:
            raise ParseError(f"expected {width} fields, got {len(row)}", line)
        vals = [_float(c.strip(), line, "value") for c in row[1:]]
        groups.setdefault(row[0].strip(), []).append(vals)
    if len(groups) != 2:
        raise ParseError(f"need exactly two groups, found {len(groups)}")
    (name_a, a), (name_b, b) = groups.items()
    return TwoGroupDataset(np.array(a), np.array(b), labels or (), (name_a, name_b))


def table_from_json(obj: dict) -> ClosureTable:
    """Rebuild a table from the ``hypotheses`` list of a closure report."""
    try:
        n = int(obj["n"])
        local = np.full(1 << n, np.nan)
        for h in obj["hypotheses"]:
            local[subset_mask(h["subset"])] = float(h["local_p"])
        labels = tuple(obj.get("labels", ()))
        test = str(obj.get("test", "external"))
    except (KeyError, TypeError, ValueError, IndexError) as err:
        raise ParseError(f"not a closure report: {err}") from None
    if np.isnan(local[1:]).any():
        raise ParseError(f"closure report must list all {(1 << n) - 1} subsets")
    return ClosureTable(n, local, labels, test)


# -- output -------------------------------------------------------------------

def lattice_key(mask: int):
    return -bin(mask).count("1"), subset_indices(mask)


def lattice_order(n: int) -> list[int]:
    """Masks by decreasing size, then lexicographically by member indices."""
    return sorted(range(1, 1 << n), key=lattice_key)


def closure_report(table: ClosureTable, alpha: float | None = None,
                   family: HypothesisFamily | None = None, meta: dict | None = None) -> dict:
    adj = table.adjusted
    hyps = []
    for mask in lattice_order(table.n):
        entry = {"subset": list(subset_indices(mask)),
                 "local_p": float(table.local[mask]),
                 "adjusted_p": float(adj[mask])}
        if alpha is not None:
            entry["rejected"] = bool(adj[mask] <= alpha)
        hyps.append(entry)
    report = {"n": table.n, "labels": list(table.labels), "test": table.test}
    if alpha is not None:
        report["alpha"] = alpha
    if meta:
        report["meta"] = meta
    report["elementary"] = [
        {"id": table.labels[i], "adjusted_p": float(adj[1 << i])} for i in range(table.n)]
    report["hypotheses"] = hyps
    if family is not None and family.edges is not None:
        report["distinct"] = distinct_report(table, family, alpha)
    return report


def distinct_report(table: ClosureTable, family: HypothesisFamily,
                    alpha: float | None = None) -> list[dict]:
    cadj = constrained_adjusted(table, family)
    out = []
    groups = sorted(distinct_closure(family).values(),
                    key=lambda g: lattice_key(g.representative))
    for g in groups:
        rep = g.representative
        entry = {"subset": list(g.indices()),
                 "members": [list(subset_indices(m)) for m in g.members],
                 "local_p": float(table.local[rep]),
                 "adjusted_p": float(cadj[rep])}
        if alpha is not None:
            entry["rejected"] = bool(cadj[rep] <= alpha)
        out.append(entry)
    return out


def dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def closure_csv(table: ClosureTable, alpha: float | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["subset", "local_p", "adjusted_p"] + (["rejected"] if alpha is not None else []))
    for mask in lattice_order(table.n):
        row = [" ".join(map(str, subset_indices(mask))), repr(float(table.local[mask])),
               repr(float(table.adjusted[mask]))]
        if alpha is not None:
            row.append(str(bool(table.adjusted[mask] <= alpha)).lower())
        w.writerow(row)
    return buf.getvalue()


def _name(indices: Sequence[int]) -> str:
    return "H_{" + ",".join(map(str, indices)) + "}"


def _covers(masks) -> list[tuple[int, int]]:
    masks = set(masks)
    pairs = []
    for upper in masks:
        below = [m for m in masks if m != upper and m & upper == m]
        for lower in below:
            if not any(mid != lower and lower & mid == lower for mid in below):
                pairs.append((upper, lower))
    return pairs


def _dot(title: str, nodes: dict[int, str], rejected: set[int], edges) -> str:
    """One node per mask, ranked by subset size, with the given edges."""
    lines = [f"digraph {title} {{", "  rankdir=TB;", '  node [shape=box, fontname="Helvetica"];']
    by_size: dict[int, list[int]] = {}
    for mask in nodes:
        by_size.setdefault(bin(mask).count("1"), []).append(mask)
    for size in sorted(by_size, reverse=True):
        for mask in sorted(by_size[size], key=lattice_key):
            style = ", style=filled, fillcolor=lightgrey" if mask in rejected else ""
            lines.append(f'  s{mask} [label="{nodes[mask]}"{style}];')
        members = " ".join(f"s{m};" for m in sorted(by_size[size], key=lattice_key))
        lines.append(f"  {{ rank=same; {members} }}")
    for upper, lower in sorted(edges, key=lambda e: (lattice_key(e[0]), lattice_key(e[1]))):
        lines.append(f"  s{upper} -> s{lower};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def closure_dot(table: ClosureTable, alpha: float | None = None) -> str:
    """Full lattice, one node per subset labelled ``H_I: p=..., adj=...``."""
    nodes = {m: f"{_name(subset_indices(m))}: p={table.local[m]:.4g}, adj={table.adjusted[m]:.4g}"
             for m in range(1, 1 << table.n)}
    rej = set() if alpha is None else {m for m in nodes if table.adjusted[m] <= alpha}
    edges = [(m, m & ~(1 << i)) for m in nodes for i in range(table.n)
             if (m >> i) & 1 and m & ~(1 << i)]
    return _dot("closure", nodes, rej, edges)


def distinct_dot(table: ClosureTable, family: HypothesisFamily,
                 alpha: float | None = None) -> str:
    """Lattice of distinct hypotheses under the family's logical constraints."""
    cadj = constrained_adjusted(table, family)
    nodes = {}
    for g in distinct_closure(family).values():
        rep = g.representative
        same = [_name(subset_indices(m)) for m in g.members if m != rep]
        alias = f" (= {' = '.join(same)})" if same else ""
        nodes[rep] = (f"{_name(subset_indices(rep))}{alias}: "
                      f"p={table.local[rep]:.4g}, adj={cadj[rep]:.4g}")
    rej = set() if alpha is None else {m for m in nodes if cadj[m] <= alpha}
    return _dot("constrained", nodes, rej, _covers(nodes))

