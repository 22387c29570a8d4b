"""Rooted phylogenetic trees and Newick I/O."""

from __future__ import annotations

from fractions import Fraction
from typing import Iterator, List, Optional

from ..numeric_lp import FLOAT_FIELD, Field, ValidationError, get_field

RESERVED = set("(),:;")


class NewickError(ValidationError):
    """Malformed Newick text; ``position`` is the 0-based character offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.message = message
        self.position = position


class Node:
    __slots__ = ("label", "length", "children", "parent")

    def __init__(self, label: Optional[str] = None, length=None, children=None):
        self.label = label
        self.length = length
        self.children: List[Node] = []
        self.parent: Optional[Node] = None
        for child in children or ():
            self.add_child(child)

    def add_child(self, child: "Node") -> "Node":
        child.parent = self
        self.children.append(child)
        return child

    def is_leaf(self) -> bool:
        return not self.children

    def preorder(self) -> Iterator["Node"]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def leaves(self) -> Iterator["Node"]:
        return (n for n in self.preorder() if n.is_leaf())

    def min_label(self) -> str:
        return min(leaf.label for leaf in self.leaves())

    def __repr__(self):
        return f"Node({self.label!r}, {self.length!r}, {len(self.children)} children)"


class PhyloTree:
    """Rooted tree whose leaves carry unique taxon labels.

    Parameters
    ----------
    root : Node
        Root node; its own ``length`` is ignored.
    field : Field
        Arithmetic used for edge lengths.
    """

    def __init__(self, root: Node, field: Field = FLOAT_FIELD):
        self.root = root
        self.field = field
        self.validate()

    def validate(self, strict: bool = False) -> None:
        seen = set()
        for node in self.root.preorder():
            if node.is_leaf():
                if not node.label:
                    raise ValidationError("leaf without a taxon label")
                if node.label in seen:
                    raise ValidationError(f"duplicate taxon {node.label!r}")
                seen.add(node.label)
            else:
                if len(node.children) < 2:
                    raise ValidationError("internal node with fewer than two children")
                if strict and node is not self.root and not node.length > 0:
                    raise ValidationError("internal edges must have positive length")

    @property
    def taxa(self) -> List[str]:
        return sorted(leaf.label for leaf in self.root.leaves())

    def depths(self) -> dict:
        """Depth of every node (root at 0), keyed by node identity."""
        zero = self.field.scalar(0)
        out = {id(self.root): zero}
        for node in self.root.preorder():
            for child in node.children:
                out[id(child)] = out[id(node)] + child.length
        return out

    def leaf_depths(self) -> dict:
        d = self.depths()
        return {leaf.label: d[id(leaf)] for leaf in self.root.leaves()}

    def height(self):
        return max(self.leaf_depths().values())

    def is_equidistant(self, rtol: float = 1e-8) -> bool:
        vals = list(self.leaf_depths().values())
        if self.field.exact:
            return all(v == vals[0] for v in vals)
        scale = 1 + max(abs(v) for v in vals)
        return max(vals) - min(vals) <= rtol * scale

    def __repr__(self):
        return f"PhyloTree({emit_newick(self)!r})"


# ---------------------------------------------------------------------------
# Newick
# ---------------------------------------------------------------------------


def _parse_number(token: str, fld: Field, pos: int):
    try:
        if fld.exact:
            return Fraction(token)
        if "/" in token:
            return float(Fraction(token))
        return float(token)
    except (ValueError, ZeroDivisionError):
        raise NewickError(f"bad branch length {token!r}", pos) from None


def parse_newick(text: str, field=None, allow_missing_lengths: bool = False) -> PhyloTree:
    """Parse one rooted Newick tree with ``label:length`` branches.

    Parameters
    ----------
    text : str
        A single Newick expression terminated by ``;``.
    field : Field or str, optional
        ``"exact"`` reads lengths as Fractions; default float.
    allow_missing_lengths : bool
        Treat absent lengths as 0 instead of failing.
    """
    fld = get_field(field)
    s = text.strip()
    pos = 0
    n = len(s)

    def skip_ws():
        nonlocal pos
        while pos < n and s[pos].isspace():
            pos += 1

    def read_label() -> str:
        nonlocal pos
        start = pos
        while pos < n and s[pos] not in RESERVED:
            pos += 1
        return s[start:pos].strip()

    def read_length(node: Node):
        nonlocal pos
        skip_ws()
        if pos < n and s[pos] == ":":
            pos += 1
            skip_ws()
            start = pos
            while pos < n and s[pos] not in RESERVED and not s[pos].isspace():
                pos += 1
            if start == pos:
                raise NewickError("missing branch length after ':'", start)
            node.length = _parse_number(s[start:pos], fld, start)
        elif allow_missing_lengths:
            node.length = fld.scalar(0)
        else:
            raise NewickError("missing branch length", pos)

    def parse_subtree(is_root: bool) -> Node:
        nonlocal pos
        skip_ws()
        node = Node()
        if pos < n and s[pos] == "(":
            pos += 1
            while True:
                node.add_child(parse_subtree(False))
                skip_ws()
                if pos >= n:
                    raise NewickError("unterminated '('", pos)
                if s[pos] == ",":
                    pos += 1
                    continue
                if s[pos] == ")":
                    pos += 1
                    break
                raise NewickError(f"unexpected {s[pos]!r}", pos)
            label = read_label()
            node.label = label or None
        else:
            label = read_label()
            if not label:
                raise NewickError("expected a taxon label", pos)
            node.label = label
        if is_root:
            skip_ws()
            if pos < n and s[pos] == ":":
                read_length(node)
            node.length = None
        else:
            read_length(node)
        return node

    if not s:
        raise NewickError("empty input", 0)
    root = parse_subtree(True)
    skip_ws()
    if pos >= n or s[pos] != ";":
        raise NewickError("expected ';'", pos)
    pos += 1
    skip_ws()
    if pos != n:
        raise NewickError("trailing characters after ';'", pos)
    if root.is_leaf():
        raise NewickError("a tree needs at least two taxa", 0)
    try:
        return PhyloTree(root, fld)
    except ValidationError as exc:
        raise NewickError(str(exc), 0) from None


def format_scalar(v) -> str:
    """Shortest text that parses back to ``v``.

    Integral values print without a decimal point; Fractions with a
    terminating decimal expansion print as decimals, others as ``p/q``.
    """
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return str(v.numerator)
        d = v.denominator
        twos = fives = 0
        while d % 2 == 0:
            d //= 2
            twos += 1
        while d % 5 == 0:
            d //= 5
            fives += 1
        if d != 1:
            return f"{v.numerator}/{v.denominator}"
        digits = max(twos, fives)
        scaled = v * 10**digits
        sign = "-" if scaled < 0 else ""
        q = str(abs(scaled.numerator))
        q = q.rjust(digits + 1, "0")
        return f"{sign}{q[:-digits]}.{q[-digits:]}"
    f = float(v)
    if f == int(f) and abs(f) < 1e15:
        return str(int(f))
    return repr(f)


def emit_newick(tree: PhyloTree) -> str:
    """Canonical Newick: children ordered by their smallest leaf label."""

    def rec(node: Node) -> str:
        if node.is_leaf():
            body = node.label
        else:
            kids = sorted(node.children, key=Node.min_label)
            body = "(" + ",".join(rec(k) for k in kids) + ")"
        if node is tree.root:
            return body
        return f"{body}:{format_scalar(node.length)}"

    return rec(tree.root) + ";"


def read_newick_file(path, field=None, allow_missing_lengths: bool = False) -> List[PhyloTree]:
    """One tree per non-empty line; errors carry ``path:line``."""
    trees = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                trees.append(parse_newick(line, field, allow_missing_lengths))
            except NewickError as exc:
                raise NewickError(f"{path}:{lineno}: {exc.message}", exc.position) from None
    return trees


def isomorphic(a: PhyloTree, b: PhyloTree) -> bool:
    """Same leaf-labelled topology with equal edge lengths."""
    return emit_newick(a) == emit_newick(b)
