"""LTL without "next": parsing, translation to Buchi automata and lasso checks.

Concrete grammar (lowest to highest precedence)::

    formula := or_expr ('U' formula)?          # U is right-associative
    or_expr := and_expr ('|' and_expr)*
    and_expr := unary ('&' unary)*
    unary   := '!' unary | '<>' unary | '[]' unary | atom_expr
    atom_expr := 'true' | IDENT | '(' formula ')'

The translation follows the classic on-the-fly tableau construction to a
generalized Buchi automaton, then a counter-based degeneralization.  Edge
labels are conjunctions of literals and are never expanded over 2^AP.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import FrozenSet, Iterable, Sequence

__all__ = [
    "Formula", "LtlSyntaxError", "parse", "to_text", "atoms",
    "Nba", "Predicate", "LassoWord", "to_nba", "accepts_lasso",
    "eval_lasso_semantics", "recurrence_atoms",
]

KINDS = ("true", "atom", "not", "and", "or", "until", "eventually", "always")


@dataclass(frozen=True)
class Formula:
    kind: str
    children: tuple = ()
    atom: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown formula kind {self.kind!r}")

    def __str__(self):
        return to_text(self)


TRUE = Formula("true")


def Atom(name: str) -> Formula:
    return Formula("atom", atom=name)


def Not(f: Formula) -> Formula:
    return Formula("not", (f,))


def And(a: Formula, b: Formula) -> Formula:
    return Formula("and", (a, b))


def Or(a: Formula, b: Formula) -> Formula:
    return Formula("or", (a, b))


def Until(a: Formula, b: Formula) -> Formula:
    return Formula("until", (a, b))


def Eventually(f: Formula) -> Formula:
    return Formula("eventually", (f,))


def Always(f: Formula) -> Formula:
    return Formula("always", (f,))


# ---------------------------------------------------------------- parsing

class LtlSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


_TOKEN = re.compile(r"\s*(?:(<>)|(\[\])|([!&|()])|([A-Za-z_][A-Za-z0-9_]*)|(\S))")


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:  # trailing whitespace
            break
        if m.group(5) is not None:
            raise LtlSyntaxError(f"unknown operator token {m.group(5)!r}", m.start(5))
        tok = next(g for g in m.groups()[:4] if g is not None)
        tokens.append((tok, m.start(m.lastindex)))
        pos = m.end()
    tokens.append(("<eof>", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i][0]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, what):
        tok, pos = self.tokens[self.i]
        where = "end of input" if tok == "<eof>" else repr(tok)
        raise LtlSyntaxError(f"expected {what}, found {where}", pos)

    def formula(self):
        left = self.or_expr()
        if self.peek() == "U":
            self.take()
            return Until(left, self.formula())
        return left

    def or_expr(self):
        left = self.and_expr()
        while self.peek() == "|":
            self.take()
            left = Or(left, self.and_expr())
        return left

    def and_expr(self):
        left = self.unary()
        while self.peek() == "&":
            self.take()
            left = And(left, self.unary())
        return left

    def unary(self):
        tok = self.peek()
        if tok == "!":
            self.take()
            return Not(self.unary())
        if tok == "<>":
            self.take()
            return Eventually(self.unary())
        if tok == "[]":
            self.take()
            return Always(self.unary())
        return self.atom_expr()

    def atom_expr(self):
        tok, _ = self.tokens[self.i]
        if tok == "(":
            self.take()
            inner = self.formula()
            if self.peek() != ")":
                self.fail("')'")
            self.take()
            return inner
        if tok == "true":
            self.take()
            return TRUE
        if tok not in ("U", "<eof>") and re.fullmatch(r"[A-Za-z_]\w*", tok):
            self.take()
            return Atom(tok)
        self.fail("a proposition, 'true' or '('")


def parse(text: str) -> Formula:
    p = _Parser(text)
    f = p.formula()
    if p.peek() != "<eof>":
        p.fail("end of input")
    return f


_PREC = {"until": 1, "or": 2, "and": 3}


def to_text(f: Formula, parent: int = 0) -> str:
    """Print ``f`` in the concrete grammar; ``parse(to_text(f)) == f``."""
    k = f.kind
    if k == "true":
        return "true"
    if k == "atom":
        return f.atom
    if k in ("not", "eventually", "always"):
        op = {"not": "!", "eventually": "<>", "always": "[]"}[k]
        return op + to_text(f.children[0], 4)
    prec = _PREC[k]
    a, b = f.children
    if k == "until":
        # right-associative: parenthesize a nested until on the left
        s = f"{to_text(a, prec + 1)} U {to_text(b, prec)}"
    else:
        op = "&" if k == "and" else "|"
        s = f"{to_text(a, prec)} {op} {to_text(b, prec + 1)}"
    return f"({s})" if prec < parent else s


def atoms(f: Formula) -> FrozenSet[str]:
    if f.kind == "atom":
        return frozenset([f.atom])
    return frozenset().union(*(atoms(c) for c in f.children)) if f.children else frozenset()


def recurrence_atoms(f: Formula) -> list[str]:
    """Atoms ``a`` appearing as ``[]<>a`` inside top-level conjunctions."""
    if f.kind == "and":
        return recurrence_atoms(f.children[0]) + recurrence_atoms(f.children[1])
    if f.kind == "always" and f.children[0].kind == "eventually":
        inner = f.children[0].children[0]
        if inner.kind == "atom":
            return [inner.atom]
    return []


# ------------------------------------------------------- negation normal form
# Internal NNF nodes are tuples: ("T",), ("F",), ("lit", name, positive),
# ("and", a, b), ("or", a, b), ("U", a, b), ("R", a, b).

_T = ("T",)
_F = ("F",)
_BINARY = ("and", "or", "U", "R")


def _nnf(f: Formula, neg: bool = False):
    k = f.kind
    if k == "true":
        return _F if neg else _T
    if k == "atom":
        return ("lit", f.atom, not neg)
    if k == "not":
        return _nnf(f.children[0], not neg)
    if k in ("and", "or"):
        a, b = (_nnf(c, neg) for c in f.children)
        flip = (k == "and") == neg
        return ("or" if flip else "and", a, b)
    if k == "until":
        a, b = (_nnf(c, neg) for c in f.children)
        return ("R", a, b) if neg else ("U", a, b)
    if k == "eventually":
        inner = _nnf(f.children[0], neg)
        return ("R", _F, inner) if neg else ("U", _T, inner)
    if k == "always":
        inner = _nnf(f.children[0], neg)
        return ("U", _T, inner) if neg else ("R", _F, inner)
    raise AssertionError(k)


# ---------------------------------------------------------------- automata

@dataclass(frozen=True)
class Predicate:
    """Conjunction of literals over atomic propositions."""
    pos: FrozenSet[str] = frozenset()
    neg: FrozenSet[str] = frozenset()

    def holds(self, letter: Iterable[str]) -> bool:
        letter = letter if isinstance(letter, (set, frozenset)) else frozenset(letter)
        return self.pos <= letter and not (self.neg & letter)

    def __str__(self):
        lits = sorted(self.pos) + ["!" + a for a in sorted(self.neg)]
        return " & ".join(lits) if lits else "true"


@dataclass
class Nba:
    """Nondeterministic Buchi automaton with predicate-labelled edges.

    ``transitions[s]`` lists ``(Predicate, target)`` pairs.
    """
    n_states: int
    initial: FrozenSet[int]
    accepting: FrozenSet[int]
    transitions: list
    ap: FrozenSet[str] = frozenset()
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        states = range(self.n_states)
        if not (set(self.initial) <= set(states) and set(self.accepting) <= set(states)):
            raise ValueError("initial/accepting states must be declared states")
        for edges in self.transitions:
            for _, t in edges:
                if not 0 <= t < self.n_states:
                    raise ValueError(f"transition target {t} is not a state")

    @property
    def n_edges(self) -> int:
        return sum(len(e) for e in self.transitions)

    def step(self, s: int, letter: FrozenSet[str]) -> FrozenSet[int]:
        """Successors of ``s`` reading ``letter``."""
        key = (s, letter)
        hit = self._cache.get(key)
        if hit is None:
            hit = frozenset(t for pred, t in self.transitions[s] if pred.holds(letter))
            self._cache[key] = hit
        return hit

    def step_set(self, states: Iterable[int], letter: FrozenSet[str]) -> FrozenSet[int]:
        out = set()
        for s in states:
            out |= self.step(s, letter)
        return frozenset(out)

    def post(self, s: int) -> FrozenSet[int]:
        """Label-agnostic successors of ``s``."""
        return frozenset(t for _, t in self.transitions[s])


def _expand_all(root):
    """Tableau expansion over subformula ids.

    Subformulas are numbered in ``repr`` order so that sets of them are cheap
    to hash and the smallest id is a deterministic choice.  Returns the id
    table, the child ids of binary operators and the nodes as
    ``[incoming set, old set, next set]``.
    """
    subs = sorted(set(_subformulas(root)), key=repr)
    rank = {g: i for i, g in enumerate(subs)}
    kind = [g[0] for g in subs]
    kids = [(rank[g[1]], rank[g[2]]) if g[0] in _BINARY else None for g in subs]
    clash = [rank.get(("lit", g[1], not g[2])) if g[0] == "lit" else None for g in subs]
    nodes = []
    index = {}  # (old, next) -> node id

    def expand(incoming, new, old, nxt):
        while new:
            f = min(new)
            new = new - {f}
            if f in old:
                continue
            tag = kind[f]
            if tag in ("lit", "T", "F"):
                if tag == "F" or clash[f] in old:
                    return
                old = old | {f}
            elif tag == "and":
                old = old | {f}
                new = new | (set(kids[f]) - old)
            else:
                a, b = kids[f]
                if tag == "or":
                    n1, x1, n2 = {a}, set(), {b}
                elif tag == "U":
                    n1, x1, n2 = {a}, {f}, {b}
                else:
                    n1, x1, n2 = {b}, {f}, {a, b}
                old = old | {f}
                expand(incoming, new | (n1 - old), old, nxt | x1)
                expand(incoming, new | (n2 - old), old, nxt)
                return
        key = (old, nxt)
        if key in index:
            nodes[index[key]][0] |= incoming
            return
        index[key] = len(nodes)
        nodes.append([set(incoming), old, nxt])
        me = index[key]
        expand({me}, frozenset(nxt), frozenset(), frozenset())

    expand({-1}, frozenset([rank[root]]), frozenset(), frozenset())
    return subs, kids, nodes


def _subformulas(f):
    yield f
    if f[0] in _BINARY:
        yield from _subformulas(f[1])
        yield from _subformulas(f[2])


def _trim(n, initial, accepting, trans):
    """Drop states that are unreachable or cannot reach an accepting cycle."""
    reach = set(initial)
    stack = list(initial)
    while stack:
        s = stack.pop()
        for _, t in trans[s]:
            if t not in reach:
                reach.add(t)
                stack.append(t)
    succ = {s: {t for _, t in trans[s] if t in reach} for s in reach}
    comp = _sccs(sorted(reach), succ)
    live = set()
    for c in comp:
        nontrivial = len(c) > 1 or any(s in succ[s] for s in c)
        if nontrivial and any(s in accepting for s in c):
            live |= c
    pred = {s: set() for s in reach}
    for s in reach:
        for t in succ[s]:
            pred[t].add(s)
    stack = list(live)
    while stack:
        t = stack.pop()
        for s in pred[t]:
            if s not in live:
                live.add(s)
                stack.append(s)
    return live


def _sccs(nodes, succ):
    """Iterative Tarjan; ``succ`` maps node -> iterable of successors."""
    index, low, on, stack, out = {}, {}, set(), [], []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(sorted(succ[root])))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on.add(w)
                    work.append((w, iter(sorted(succ[w]))))
                    advanced = True
                    break
                if w in on:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[v])
            if low[v] == index[v]:
                comp = set()
                while True:
                    w = stack.pop()
                    on.discard(w)
                    comp.add(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def _reduce(n, initial, accepting, trans):
    """Trim, then merge states with identical signatures until stable."""
    live = _trim(n, initial, accepting, trans)
    order = sorted(live)
    remap = {s: i for i, s in enumerate(order)}
    trans = [[(p, remap[t]) for p, t in trans[s] if t in remap] for s in order]
    initial = {remap[s] for s in initial if s in remap}
    accepting = {remap[s] for s in accepting if s in remap}
    n = len(order)
    while True:
        classes = {}
        cls_of = []
        for s in range(n):
            sig = (s in accepting, frozenset(trans[s]))
            cls_of.append(classes.setdefault(sig, len(classes)))
        if len(classes) == n:
            break
        new_trans = [None] * len(classes)
        for s in range(n):
            c = cls_of[s]
            if new_trans[c] is None:
                new_trans[c] = sorted({(p, cls_of[t]) for p, t in trans[s]},
                                      key=lambda e: (e[1], sorted(e[0].pos), sorted(e[0].neg)))
        initial = {cls_of[s] for s in initial}
        accepting = {cls_of[s] for s in accepting}
        trans, n = new_trans, len(classes)
    return n, frozenset(initial), frozenset(accepting), trans


@lru_cache(maxsize=4096)
def to_nba(f: Formula) -> Nba:
    """Translate ``f`` to a Buchi automaton accepting exactly its models."""
    root = _nnf(f)
    subs, kids, nodes = _expand_all(root)
    untils = [u for u, g in enumerate(subs) if g[0] == "U"]

    # tableau node k becomes automaton state k+1; state 0 is the initial pseudo-state
    preds = []
    for _, old, _ in nodes:
        lits = [subs[x] for x in old if subs[x][0] == "lit"]
        preds.append(Predicate(frozenset(n for _, n, p in lits if p),
                               frozenset(n for _, n, p in lits if not p)))
    gen_trans = [[] for _ in range(len(nodes) + 1)]
    for k, (incoming, _, _) in enumerate(nodes):
        for src in incoming:
            gen_trans[src + 1].append((preds[k], k + 1))
    acc_sets = []
    for u in untils:
        acc_sets.append({k + 1 for k, (_, old, _) in enumerate(nodes)
                         if kids[u][1] in old or u not in old})

    n_gen = len(nodes) + 1
    if not acc_sets:
        n, init, acc, trans = n_gen, {0}, set(range(n_gen)), gen_trans
    else:
        # counter degeneralization, built only over reachable (state, counter) pairs
        m = len(acc_sets)
        ids = {(0, 0): 0}
        queue = [(0, 0)]
        trans = []
        acc = set()
        while len(trans) < len(queue):
            q, i = queue[len(trans)]
            if i == 0 and q in acc_sets[0]:
                acc.add(ids[(q, i)])
            j = (i + 1) % m if q in acc_sets[i] else i
            edges = []
            for p, t in gen_trans[q]:
                key = (t, j)
                if key not in ids:
                    ids[key] = len(queue)
                    queue.append(key)
                edges.append((p, ids[key]))
            trans.append(edges)
        n, init = len(queue), {0}
    n, init, acc, trans = _reduce(n, init, acc, trans)
    return Nba(n, init, acc, trans, ap=atoms(f))


# ------------------------------------------------------------ lasso words

@dataclass(frozen=True)
class LassoWord:
    prefix: tuple
    cycle: tuple

    def __init__(self, prefix: Sequence[Iterable[str]], cycle: Sequence[Iterable[str]]):
        if len(cycle) < 1:
            raise ValueError("lasso cycle must be nonempty")
        object.__setattr__(self, "prefix", tuple(frozenset(a) for a in prefix))
        object.__setattr__(self, "cycle", tuple(frozenset(a) for a in cycle))

    def __len__(self):
        return len(self.prefix) + len(self.cycle)

    def letter(self, i: int) -> FrozenSet[str]:
        n = len(self.prefix)
        return self.prefix[i] if i < n else self.cycle[(i - n) % len(self.cycle)]


def accepts_lasso(a: Nba, w: LassoWord) -> bool:
    current = set(a.initial)
    for letter in w.prefix:
        current = a.step_set(current, letter)
        if not current:
            return False
    m = len(w.cycle)
    # product of the automaton with positions of the cycle
    start = [(q, 0) for q in sorted(current)]
    succ = {}
    stack = list(start)
    seen = set(start)
    while stack:
        node = stack.pop()
        q, j = node
        nxt = [(t, (j + 1) % m) for t in sorted(a.step(q, w.cycle[j]))]
        succ[node] = nxt
        for v in nxt:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    for comp in _sccs(sorted(seen), succ):
        if any(q in a.accepting for q, _ in comp):
            if len(comp) > 1 or any(v in succ[v] for v in comp):
                return True
    return False


def eval_lasso_semantics(f: Formula, w: LassoWord) -> bool:
    """Truth of ``w |= f`` evaluated directly on the folded positions of ``w``."""
    n = len(w)
    loop = len(w.prefix)
    nxt = [i + 1 if i + 1 < n else loop for i in range(n)]
    letters = [w.letter(i) for i in range(n)]
    memo = {}

    def ev(g: Formula):
        if g in memo:
            return memo[g]
        k = g.kind
        if k == "true":
            v = [True] * n
        elif k == "atom":
            v = [g.atom in letters[i] for i in range(n)]
        elif k == "not":
            v = [not x for x in ev(g.children[0])]
        elif k == "and":
            a, b = ev(g.children[0]), ev(g.children[1])
            v = [x and y for x, y in zip(a, b)]
        elif k == "or":
            a, b = ev(g.children[0]), ev(g.children[1])
            v = [x or y for x, y in zip(a, b)]
        elif k in ("until", "eventually"):
            a = ev(g.children[0]) if k == "until" else [True] * n
            b = ev(g.children[-1])
            v = _least_fixpoint(a, b, nxt)
        elif k == "always":
            inner = ev(g.children[0])
            ev_not = _least_fixpoint([True] * n, [not x for x in inner], nxt)
            v = [not x for x in ev_not]
        else:
            raise AssertionError(k)
        memo[g] = v
        return v

    return ev(f)[0]


def _least_fixpoint(a, b, nxt):
    n = len(a)
    v = [False] * n
    for _ in range(n + 1):
        changed = False
        for i in range(n - 1, -1, -1):
            val = b[i] or (a[i] and v[nxt[i]])
            if val != v[i]:
                v[i] = val
                changed = True
        if not changed:
            break
    return v


def random_formula(rng, depth: int, props: Sequence[str]) -> Formula:
    """Random formula of at most ``depth`` operator levels (test helper)."""
    if depth == 0 or rng.random() < 0.2:
        return TRUE if rng.random() < 0.1 else Atom(rng.choice(list(props)))
    kind = rng.choice(["not", "and", "or", "until", "eventually", "always"])
    if kind in ("and", "or", "until"):
        return Formula(kind, (random_formula(rng, depth - 1, props),
                              random_formula(rng, depth - 1, props)))
    return Formula(kind, (random_formula(rng, depth - 1, props),))


def random_lasso(rng, props: Sequence[str], max_prefix=4, max_cycle=4) -> LassoWord:
    def letter():
        return [p for p in props if rng.random() < 0.5]
    pre = [letter() for _ in range(rng.randint(0, max_prefix))]
    cyc = [letter() for _ in range(rng.randint(1, max_cycle))]
    return LassoWord(pre, cyc)
