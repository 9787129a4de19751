"""Detour removal for position-decorated natural deduction derivations.

A *segment* is a run of identically-concluded formula occurrences threaded
through case-split conclusions (``or-e``/``dia-e``): it starts at an
occurrence that is not such a conclusion, repeatedly steps from a minor
premise to the case split's conclusion, and ends where no further step is
possible.  A *cut* is a maximal segment that begins at an introduction and
ends as the major premise of an elimination; its *degree* is the degree of
the formula running along it.

The *rank* of a derivation is ``(0, 0)`` when it has no cuts, and otherwise
``(d, n)`` where ``d`` is the highest cut degree and ``n`` the total length
of all cuts of that degree.  Normalization repeatedly picks a highest-degree
cut whose duplication zones contain no other highest-degree cut, shrinks its
segment to length one with commutative contractions, and removes it with the
matching proper contraction; each such round strictly decreases the rank.
A final, rank-preserving phase pushes any remaining eliminations through
case-split conclusions so that no contraction applies to the result.
"""

from __future__ import annotations

from dataclasses import dataclass

from .syntax import degree
from .kernel import (
    Derivation,
    System,
    check,
    freshen,
    substitute,
    relabel_binders,
    plug,
    all_labels,
    _rebuild,
    INTRO_RULES,
    ELIM_RULES,
    JOIN_RULES,
)

Occurrence = tuple[int, ...]
Rank = tuple[int, int]

__all__ = [
    "Occurrence",
    "Rank",
    "Segment",
    "Cut",
    "NormalizerError",
    "NotARedex",
    "NotApplicable",
    "RankIncreased",
    "FlavorUnsupported",
    "NotNormal",
    "subtree_at",
    "segments",
    "cuts",
    "rank",
    "contract_proper",
    "contract_commutative",
    "reduce_once",
    "normalize",
    "normalize_steps",
    "is_normal",
    "spine",
    "all_spines",
    "spine_decompose",
]


class NormalizerError(Exception):
    """Base class for normalization errors and broken internal invariants."""


class NotARedex(NormalizerError):
    """The addressed cut is not a length-one introduction/elimination pair."""


class NotApplicable(NormalizerError):
    """The addressed node is not an elimination over a case-split conclusion."""


class RankIncreased(NormalizerError):
    """A normalization round failed to strictly decrease the rank."""


class FlavorUnsupported(NormalizerError):
    """Normalization is only defined for the intuitionistic flavor."""


class NotNormal(NormalizerError):
    """The operation needs a derivation in normal form."""


@dataclass(frozen=True)
class Segment:
    """A maximal run of occurrences sharing one conclusion, leaf-end first."""

    occurrences: tuple[Occurrence, ...]

    @property
    def start(self) -> Occurrence:
        return self.occurrences[0]

    @property
    def end(self) -> Occurrence:
        return self.occurrences[-1]

    def __len__(self) -> int:
        return len(self.occurrences)


@dataclass(frozen=True)
class Cut:
    """A maximal segment from an introduction into an elimination's major slot."""

    segment: Segment
    connective: str
    degree: int


_INTRO_FAMILY = {
    "and-i": "and",
    "or-i1": "or",
    "or-i2": "or",
    "imp-i": "imp",
    "box-i": "box",
    "dia-i": "dia",
}
_ELIM_FAMILY = {
    "and-e1": "and",
    "and-e2": "and",
    "or-e": "or",
    "imp-e": "imp",
    "box-e": "box",
    "dia-e": "dia",
}


# --- tree addressing -------------------------------------------------------


def subtree_at(d: Derivation, path: Occurrence) -> Derivation:
    """The subderivation whose root is reached by the premise indices in ``path``."""
    node = d
    for i in path:
        node = node.premises[i]
    return node


def _replace_at(d: Derivation, path: Occurrence, new: Derivation) -> Derivation:
    if not path:
        return new
    i = path[0]
    prems = list(d.premises)
    prems[i] = _replace_at(prems[i], path[1:], new)
    return _rebuild(d, tuple(prems))


def _node_index(d: Derivation) -> dict[Occurrence, Derivation]:
    out: dict[Occurrence, Derivation] = {}
    stack: list[tuple[Occurrence, Derivation]] = [((), d)]
    while stack:
        path, node = stack.pop()
        out[path] = node
        for i, p in enumerate(node.premises):
            stack.append((path + (i,), p))
    return out


def _postorder(d: Derivation) -> dict[Occurrence, int]:
    order: dict[Occurrence, int] = {}

    def go(n: Derivation, path: Occurrence) -> None:
        for i, p in enumerate(n.premises):
            go(p, path + (i,))
        order[path] = len(order)

    go(d, ())
    return order


def _is_minor_root(path: Occurrence, idx: dict[Occurrence, Derivation]) -> bool:
    if not path:
        return False
    parent = idx[path[:-1]]
    i = path[-1]
    if parent.rule == "or-e":
        return i in (1, 2)
    if parent.rule == "dia-e":
        return i == 1
    return False


# --- segments, cuts, rank --------------------------------------------------


def segments(d: Derivation) -> tuple[Segment, ...]:
    """Every maximal segment, ordered by the position of its starting occurrence.

    Segments cannot start at an ``or-e``/``dia-e`` conclusion; they extend
    from each remaining occurrence through enclosing case-split conclusions
    for as long as the current occurrence fills a minor premise slot.  A
    case-split conclusion therefore lies on one chain per minor premise, so
    the segments cover every occurrence but only partition them in trees
    without such splits.
    """
    idx = _node_index(d)
    out = []
    for path in sorted(idx):
        if idx[path].rule in JOIN_RULES:
            continue
        occ = [path]
        cur = path
        while _is_minor_root(cur, idx):
            cur = cur[:-1]
            occ.append(cur)
        out.append(Segment(tuple(occ)))
    return tuple(out)


def cuts(d: Derivation) -> tuple[Cut, ...]:
    """The maximal segments that run from an introduction into an elimination."""
    idx = _node_index(d)
    res = []
    for seg in segments(d):
        start = idx[seg.start]
        fam = _INTRO_FAMILY.get(start.rule)
        if fam is None:
            continue
        end = seg.end
        if not end or end[-1] != 0:
            continue
        parent = idx[end[:-1]]
        if _ELIM_FAMILY.get(parent.rule) != fam:
            continue
        res.append(Cut(seg, fam, degree(start.conclusion.formula)))
    return tuple(res)


def rank(d: Derivation) -> Rank:
    """``(0, 0)`` when cut-free, else (max cut degree, total length at that degree)."""
    cs = cuts(d)
    if not cs:
        return (0, 0)
    top = max(c.degree for c in cs)
    return (top, sum(len(c.segment) for c in cs if c.degree == top))


# --- cut selection ---------------------------------------------------------


def _dup_zones(cut: Cut, idx: dict[Occurrence, Derivation]) -> list[Occurrence]:
    """Path prefixes of the subtrees a contraction of ``cut`` may duplicate:
    the elimination's non-major premises and the introduction's premises."""
    zones = []
    e = cut.segment.end[:-1]
    for i in range(1, len(idx[e].premises)):
        zones.append(e + (i,))
    start = cut.segment.start
    for i in range(len(idx[start].premises)):
        zones.append(start + (i,))
    return zones


def _select(d: Derivation, cs: tuple[Cut, ...]) -> Cut:
    """A highest-degree cut whose duplication zones hold no other highest cut.

    Such a cut always exists; contracting it strictly shrinks the rank
    because only cut-free material is ever duplicated.  Ties break toward
    the segment end that comes first in postorder, then the earliest start
    (two cuts can share their end at a case-split conclusion).
    """
    idx = _node_index(d)
    top = max(c.degree for c in cs)
    cands = [c for c in cs if c.degree == top]

    def blocked(c: Cut) -> bool:
        zones = _dup_zones(c, idx)
        for other in cands:
            if other is c:
                continue
            for o in other.segment.occurrences:
                if any(o[: len(z)] == z for z in zones):
                    return True
        return False

    pool = [c for c in cands if not blocked(c)] or cands
    po = _postorder(d)
    return min(pool, key=lambda c: (po[c.segment.end], po[c.segment.start]))


# --- proper contraction ----------------------------------------------------


def _contract_proper_core(
    d: Derivation,
    elim_path: Occurrence,
    system: System,
    t_strict: bool,
) -> Derivation:
    """Rewrite the introduction/elimination pair rooted at ``elim_path``."""
    R = subtree_at(d, elim_path)
    I = R.premises[0]
    forb = all_labels(d)
    r = R.rule
    if r == "and-e1":
        new = I.premises[0]
    elif r == "and-e2":
        new = I.premises[1]
    elif r == "imp-e":
        skel = relabel_binders(I.premises[0], forb)
        new = plug(skel, I.discharges[0], R.premises[1], "p")
    elif r == "or-e":
        if I.rule == "or-i1":
            slot, labels = 1, R.discharges[0]
        else:
            slot, labels = 2, R.discharges[1]
        skel = relabel_binders(R.premises[slot], forb)
        new = plug(skel, labels, I.premises[0], "p")
    elif r == "box-e":
        alpha = I.conclusion.position
        witness = alpha + (I.token,)
        new = substitute(
            I.premises[0],
            witness,
            alpha + tuple(R.beta or ()),
            system,
            t_strict_empty_beta=t_strict,
        )
        if I.e_discharges:
            new = plug(new, I.e_discharges, R.premises[1], "e")
    elif r == "dia-e":
        alpha = I.conclusion.position
        witness = alpha + (R.token,)
        mapped = substitute(
            R.premises[1],
            witness,
            alpha + tuple(I.beta or ()),
            system,
            t_strict_empty_beta=t_strict,
        )
        skel = relabel_binders(mapped, forb)
        if R.e_discharges:
            skel = plug(skel, R.e_discharges, I.premises[1], "e")
        new = plug(skel, R.discharges[0], I.premises[0], "p")
    else:  # pragma: no cover - guarded by the caller
        raise NotARedex(f"no proper contraction for rule {r!r}")
    if new.conclusion != R.conclusion:
        raise NormalizerError(
            "proper contraction changed the conclusion at "
            f"{'.'.join(map(str, elim_path)) or 'root'}"
        )
    return _replace_at(d, elim_path, new)


def contract_proper(
    d: Derivation,
    cut: Cut,
    system: System,
    *,
    t_strict_empty_beta: bool = False,
) -> Derivation:
    """Remove a length-one cut; the whole rewritten derivation is returned.

    Raises :class:`NotARedex` unless the cut is a single occurrence that is
    an introduction filling the major slot of a matching elimination.  The
    input must check; the result checks with the same conclusion (open
    assumptions may gain duplicates where subderivations are copied).
    """
    occ = cut.segment.occurrences
    if len(occ) != 1:
        raise NotARedex(
            f"cut segment has length {len(occ)}; shrink it to 1 with "
            "commutative contractions first"
        )
    o = occ[0]
    if not o or o[-1] != 0:
        raise NotARedex("the cut occurrence does not fill a major premise slot")
    try:
        R = subtree_at(d, o[:-1])
    except IndexError:
        raise NotARedex("the cut occurrence is not a position in this derivation")
    I = R.premises[0]
    if _ELIM_FAMILY.get(R.rule) is None or _INTRO_FAMILY.get(I.rule) is None:
        raise NotARedex(f"{I.rule!r} under {R.rule!r} is not a contractible pair")
    if _ELIM_FAMILY[R.rule] != _INTRO_FAMILY[I.rule]:
        raise NotARedex(f"{I.rule!r} under {R.rule!r} is not a contractible pair")
    if not check(d, system, t_strict_empty_beta=t_strict_empty_beta).ok:
        raise ValueError("contract_proper requires a derivation that checks")
    out = freshen(_contract_proper_core(freshen(d), o[:-1], system, t_strict_empty_beta))
    rep = check(out, system, t_strict_empty_beta=t_strict_empty_beta)
    if not rep.ok:
        raise NormalizerError(
            "proper contraction broke the derivation: "
            + "; ".join(v.message for v in rep.violations[:3])
        )
    return out


# --- commutative contraction -----------------------------------------------


def _commute_node(R: Derivation, forbidden: frozenset[str]) -> Derivation:
    """Push the elimination ``R`` into the minors of its case-split major."""
    J = relabel_binders(R.premises[0], forbidden | all_labels(R))
    slots = (1, 2) if J.rule == "or-e" else (1,)
    sides = R.premises[1:]
    used = set(forbidden) | set(all_labels(R)) | set(all_labels(J))
    prems = list(J.premises)
    for s in slots:
        copy = relabel_binders(_rebuild(R, (J.premises[s],) + sides), frozenset(used))
        used |= set(all_labels(copy))
        prems[s] = copy
    return _rebuild(J, tuple(prems))


def contract_commutative(
    d: Derivation,
    at: Occurrence,
    system: System,
    *,
    t_strict_empty_beta: bool = False,
) -> Derivation:
    """Commute the elimination at ``at`` with the case split above its major.

    Raises :class:`NotApplicable` unless the addressed node is an elimination
    whose major premise is an ``or-e``/``dia-e`` conclusion.  The conclusion
    is preserved; every segment running through that conclusion shrinks by
    one, and side premises of the elimination are duplicated per minor (their
    discharge labels are renamed fresh to stay unique).
    """
    try:
        R = subtree_at(d, at)
    except IndexError:
        raise NotApplicable(f"{'.'.join(map(str, at)) or 'root'} is not a position")
    if R.rule not in ELIM_RULES:
        raise NotApplicable(f"node at {'.'.join(map(str, at)) or 'root'} is {R.rule}, "
                            "not an elimination")
    if R.premises[0].rule not in JOIN_RULES:
        raise NotApplicable(
            f"the major premise is {R.premises[0].rule}, not a case-split conclusion"
        )
    if not check(d, system, t_strict_empty_beta=t_strict_empty_beta).ok:
        raise ValueError("contract_commutative requires a derivation that checks")
    base = freshen(d)
    out = freshen(
        _replace_at(base, at, _commute_node(subtree_at(base, at), all_labels(base)))
    )
    rep = check(out, system, t_strict_empty_beta=t_strict_empty_beta)
    if not rep.ok:
        raise NormalizerError(
            "commutative contraction broke the derivation: "
            + "; ".join(v.message for v in rep.violations[:3])
        )
    return out


# --- normalization ---------------------------------------------------------


def is_normal(d: Derivation) -> bool:
    """True iff no elimination's major premise is an introduction or a
    case-split conclusion anywhere — i.e. no contraction applies."""
    return not any(
        n.rule in ELIM_RULES
        and (n.premises[0].rule in INTRO_RULES or n.premises[0].rule in JOIN_RULES)
        for n in d
    )


def _cut_at(d: Derivation, o: Occurrence) -> Cut:
    start = subtree_at(d, o)
    return Cut(Segment((o,)), _INTRO_FAMILY[start.rule], degree(start.conclusion.formula))


def _resolve_joins(
    d: Derivation, log: list[tuple[str, Occurrence]]
) -> Derivation:
    """Commute every elimination off a case-split conclusion, cut-free phase.

    Recurses on strictly shrinking major premises, so it terminates; in a
    cut-free derivation no commutation can create a cut, so the rank stays
    ``(0, 0)``.
    """

    def resolve(node: Derivation, path: Occurrence) -> Derivation:
        while node.rule in ELIM_RULES and node.premises[0].rule in JOIN_RULES:
            node = _commute_node(node, frozenset())
            log.append(("commutative", path))
            slots = (1, 2) if node.rule == "or-e" else (1,)
            prems = list(node.premises)
            for s in slots:
                prems[s] = resolve(prems[s], path + (s,))
            node = _rebuild(node, tuple(prems))
        return node

    def walk(node: Derivation, path: Occurrence) -> Derivation:
        prems = tuple(walk(p, path + (i,)) for i, p in enumerate(node.premises))
        return resolve(_rebuild(node, prems), path)

    return walk(d, ())


def normalize_steps(
    d: Derivation,
    system: System,
    *,
    t_strict_empty_beta: bool = False,
) -> tuple[Derivation, list[Rank], list[tuple[int, str, Occurrence, Rank]]]:
    """Like :func:`normalize`, also returning one log entry per applied
    contraction: (round number, kind, elimination path, rank afterwards)."""
    if system.flavor != "intuitionistic":
        raise FlavorUnsupported(
            "normalization is defined for the intuitionistic flavor only"
        )
    if not check(d, system, t_strict_empty_beta=t_strict_empty_beta).ok:
        raise ValueError("normalize requires a derivation that checks")
    cur = freshen(d)
    trace: list[Rank] = [rank(cur)]
    steps: list[tuple[int, str, Occurrence, Rank]] = []
    rounds = 0
    while True:
        cs = cuts(cur)
        if not cs:
            break
        rounds += 1
        prev = trace[-1]
        sel = _select(cur, cs)
        seg = list(sel.segment.occurrences)
        while len(seg) > 1:
            end = seg[-1]
            e = end[:-1]
            mslot = seg[-2][len(e) + 1]
            cur = contract_commutative(
                cur, e, system, t_strict_empty_beta=t_strict_empty_beta
            )
            steps.append((rounds, "commutative", e, rank(cur)))
            old_prefix = e + (0, mslot)
            new_prefix = e + (mslot, 0)
            seg = [new_prefix + o[len(old_prefix):] for o in seg[:-1]]
        cur = contract_proper(
            cur, _cut_at(cur, seg[0]), system, t_strict_empty_beta=t_strict_empty_beta
        )
        rk = rank(cur)
        steps.append((rounds, "proper", seg[0][:-1], rk))
        trace.append(rk)
        if not rk < prev:
            raise RankIncreased(
                f"round {rounds} went from rank {prev} to {rk}"
            )
    cleanup: list[tuple[str, Occurrence]] = []
    cur = _resolve_joins(cur, cleanup)
    if cleanup:
        cur = freshen(cur)
        for kind, path in cleanup:
            rounds += 1
            steps.append((rounds, kind, path, (0, 0)))
    rep = check(cur, system, t_strict_empty_beta=t_strict_empty_beta)
    if not rep.ok:
        raise NormalizerError(
            "normalization broke the derivation: "
            + "; ".join(v.message for v in rep.violations[:3])
        )
    if cuts(cur) or not is_normal(cur):
        raise NormalizerError("normalization finished on a non-normal derivation")
    if cur.conclusion != d.conclusion:
        raise NormalizerError("normalization changed the conclusion")
    return cur, trace, steps


def normalize(
    d: Derivation,
    system: System,
    *,
    t_strict_empty_beta: bool = False,
) -> tuple[Derivation, list[Rank]]:
    """Contract until no contraction applies, intuitionistic flavor only.

    Returns the normal derivation and the rank trace: the initial rank
    followed by the rank after each round (a round = the commutative
    contractions that shrink the selected cut to length one, then its proper
    contraction).  The trace is strictly decreasing and ends at ``(0, 0)``;
    the cut-free cleanup commutations that follow do not add entries.
    """
    out, trace, _ = normalize_steps(
        d, system, t_strict_empty_beta=t_strict_empty_beta
    )
    return out, trace


def reduce_once(
    d: Derivation,
    system: System,
    *,
    t_strict_empty_beta: bool = False,
) -> Derivation | None:
    """Apply one contraction step of the normalization strategy, or ``None``
    when the derivation is already normal."""
    if system.flavor != "intuitionistic":
        raise FlavorUnsupported(
            "normalization is defined for the intuitionistic flavor only"
        )
    if not check(d, system, t_strict_empty_beta=t_strict_empty_beta).ok:
        raise ValueError("reduce_once requires a derivation that checks")
    cs = cuts(d)
    if cs:
        sel = _select(d, cs)
        if len(sel.segment) > 1:
            return contract_commutative(
                d, sel.segment.end[:-1], system,
                t_strict_empty_beta=t_strict_empty_beta,
            )
        return contract_proper(
            d, sel, system, t_strict_empty_beta=t_strict_empty_beta
        )
    idx = _node_index(d)
    cands = [
        p
        for p, n in idx.items()
        if n.rule in ELIM_RULES and n.premises[0].rule in JOIN_RULES
    ]
    if not cands:
        return None
    at = min(cands, key=lambda p: (-len(p), p))
    return contract_commutative(
        d, at, system, t_strict_empty_beta=t_strict_empty_beta
    )


# --- spines ----------------------------------------------------------------


def _spine_options(n: Derivation) -> tuple[int, ...]:
    if n.rule in ("hyp", "ehyp"):
        return ()
    if n.rule in ELIM_RULES:
        return (0,)
    if n.rule in ("bot-i", "bot-c"):
        return (0,)
    if n.rule == "and-i":
        return (0, 1)
    return (0,)  # remaining introductions have one proof premise


def spine(d: Derivation) -> tuple[Occurrence, ...]:
    """The unique maximal path of occurrences from a leaf to the root that
    enters every elimination through its major premise.

    Walks down from the root: eliminations continue through the major
    premise, absurdity steps through their premise, introductions through
    their proof premise.  Raises ``ValueError`` below a conjunction
    introduction, where the path branches and is not unique.
    """
    node = d
    path: Occurrence = ()
    acc = [path]
    while True:
        opts = _spine_options(node)
        if not opts:
            break
        if len(opts) > 1:
            raise ValueError(
                "the spine is not unique: a conjunction introduction branches"
            )
        path = path + (opts[0],)
        node = node.premises[opts[0]]
        acc.append(path)
    return tuple(reversed(acc))


def all_spines(d: Derivation) -> tuple[tuple[Occurrence, ...], ...]:
    """Every maximal leaf-to-root path (branching at multi-premise
    introductions); each path is ordered leaf first."""

    def walk(node: Derivation, path: Occurrence) -> list[list[Occurrence]]:
        opts = _spine_options(node)
        if not opts:
            return [[path]]
        out = []
        for i in opts:
            for tail in walk(node.premises[i], path + (i,)):
                out.append(tail + [path])
        return out

    return tuple(tuple(p) for p in walk(d, ()))


def spine_decompose(
    d: Derivation,
) -> tuple[tuple[Occurrence, ...], tuple[Occurrence, ...], tuple[Occurrence, ...]]:
    """Split the spine of a normal derivation into its elimination part
    (leaf and elimination conclusions), minimum part (absurdity-step
    conclusions), and introduction part — in that order along the spine.

    Raises :class:`NotNormal` when the derivation is not normal or the three
    phases do not appear in order.
    """
    if not is_normal(d):
        raise NotNormal("spine decomposition needs a normal derivation")
    s = spine(d)
    phases = []
    for occ in s:
        r = subtree_at(d, occ).rule
        if r in ("bot-i", "bot-c"):
            phases.append(1)
        elif r in INTRO_RULES:
            phases.append(2)
        else:
            phases.append(0)
    if any(a > b for a, b in zip(phases, phases[1:])):
        raise NotNormal("spine phases out of order; derivation is not normal")
    elim = tuple(o for o, p in zip(s, phases) if p == 0)
    minimum = tuple(o for o, p in zip(s, phases) if p == 1)
    intro = tuple(o for o, p in zip(s, phases) if p == 2)
    return elim, minimum, intro
