"""Seeded random generation of checking derivations for property tests.

``random_derivation(rng, system)`` grows a pool of subderivations by
repeatedly applying randomly chosen rules and keeping only results that
check in the given system, so every returned tree checks by construction.
"""

from __future__ import annotations

import random

from posnd import kernel as K
from posnd.syntax import (
    Atom,
    Bottom,
    And,
    Or,
    Imp,
    Box,
    Dia,
    EFormula,
    PFormula,
    neg,
)

TOKENS = ("a", "b")


def random_position(rng: random.Random, maxlen: int = 2) -> tuple[str, ...]:
    return tuple(rng.choice(TOKENS) for _ in range(rng.randrange(maxlen + 1)))


def random_formula(rng: random.Random, depth: int = 2):
    if depth == 0 or rng.random() < 0.4:
        return rng.choice([Atom("p"), Atom("q"), Bottom()])
    kind = rng.choice(["and", "or", "imp", "box", "dia"])
    if kind == "box":
        return Box(random_formula(rng, depth - 1))
    if kind == "dia":
        return Dia(random_formula(rng, depth - 1))
    left = random_formula(rng, depth - 1)
    right = random_formula(rng, depth - 1)
    return {"and": And, "or": Or, "imp": Imp}[kind](left, right)


def _beta_len_ok(logic: str, n: int) -> bool:
    return {
        "k": n == 1,
        "d": n == 1,
        "t": n <= 1,
        "k4": n >= 1,
        "d4": n >= 1,
        "s4": True,
    }[logic]


def _legal_beta(rng: random.Random, logic: str) -> tuple[str, ...]:
    lengths = {
        "k": [1],
        "d": [1],
        "t": [0, 1],
        "k4": [1, 2],
        "d4": [1, 2],
        "s4": [0, 1, 2],
    }[logic]
    return tuple(rng.choice(TOKENS) for _ in range(rng.choice(lengths)))


def random_derivation(
    rng: random.Random, system: K.System, steps: int = 10
) -> K.Derivation:
    labels = iter(f"h{i}" for i in range(1000))
    pool: list[K.Derivation] = [
        K.hyp(next(labels), random_formula(rng), random_position(rng))
        for _ in range(3)
    ]

    def attempt(d: K.Derivation) -> None:
        if d is None:
            return
        rep = K.check(d, system)
        if rep.ok:
            pool.append(d)

    def p_opens(d: K.Derivation):
        return [
            a
            for a in K.check(d, system).open_assumptions
            if isinstance(a.content, PFormula)
        ]

    for _ in range(steps):
        move = rng.choice(
            [
                "hyp",
                "and_i",
                "and_e",
                "or_i",
                "or_e",
                "imp_i",
                "imp_e",
                "bot_i",
                "bot_c",
                "box_e",
                "box_i",
                "dia_i",
                "dia_e",
            ]
        )
        try:
            if move == "hyp":
                attempt(
                    K.hyp(next(labels), random_formula(rng), random_position(rng))
                )
            elif move == "and_i":
                d = rng.choice(pool)
                partner = K.hyp(
                    next(labels), random_formula(rng), d.conclusion.position
                )
                attempt(K.and_i(d, partner))
            elif move == "and_e":
                cands = [d for d in pool if isinstance(d.conclusion.formula, And)]
                if cands:
                    ctor = K.and_e1 if rng.random() < 0.5 else K.and_e2
                    attempt(ctor(rng.choice(cands)))
            elif move == "or_i":
                d = rng.choice(pool)
                ctor = K.or_i1 if rng.random() < 0.5 else K.or_i2
                attempt(ctor(random_formula(rng, 1), d))
            elif move == "or_e":
                f, g = random_formula(rng, 1), random_formula(rng, 1)
                pos = random_position(rng)
                major = K.hyp(next(labels), Or(f, g), pos)
                l1, l2 = next(labels), next(labels)
                minor1 = K.or_i1(g, K.hyp(l1, f, pos))
                minor2 = K.or_i2(f, K.hyp(l2, g, pos))
                attempt(
                    K.or_e(major, frozenset({l1}), minor1, frozenset({l2}), minor2)
                )
            elif move == "imp_i":
                d = rng.choice(pool)
                opens = p_opens(d)
                if opens and rng.random() < 0.8:
                    a = rng.choice(opens)
                    if a.content.position == d.conclusion.position:
                        attempt(K.imp_i(frozenset({a.label}), d))
                else:
                    attempt(
                        K.imp_i(
                            frozenset(),
                            d,
                            ante=PFormula(
                                random_formula(rng, 1), d.conclusion.position
                            ),
                        )
                    )
            elif move == "imp_e":
                d = rng.choice(pool)
                major = K.hyp(
                    next(labels),
                    Imp(d.conclusion.formula, random_formula(rng, 1)),
                    d.conclusion.position,
                )
                attempt(K.imp_e(major, d))
            elif move == "bot_i":
                cands = [
                    d for d in pool if isinstance(d.conclusion.formula, Bottom)
                ]
                if cands:
                    attempt(
                        K.bot_i(
                            rng.choice(cands),
                            rng.choice([Atom("p"), Atom("q"), Bottom()]),
                            random_position(rng),
                        )
                    )
            elif move == "bot_c" and system.flavor == "classical":
                cands = [
                    d for d in pool if isinstance(d.conclusion.formula, Bottom)
                ]
                if cands:
                    attempt(
                        K.bot_c(
                            frozenset({next(labels)}),
                            rng.choice(cands),
                            random_formula(rng, 1),
                            random_position(rng),
                        )
                    )
            elif move == "box_e":
                f = random_formula(rng, 1)
                pos = random_position(rng, 1)
                major = K.hyp(next(labels), Box(f), pos)
                beta = _legal_beta(rng, system.logic)
                eprem = (
                    K.ehyp(next(labels), pos + beta) if system.partial else None
                )
                attempt(K.box_e(major, beta, eprem))
            elif move == "box_i":
                cands = [d for d in pool if d.conclusion.position]
                if not cands:
                    continue
                d = rng.choice(cands)
                pos = d.conclusion.position
                if pos:
                    e_labels = frozenset(
                        a.label
                        for a in K.check(d, system).open_assumptions
                        if isinstance(a.content, EFormula)
                        and a.content.position == pos
                    )
                    if not system.partial:
                        e_labels = frozenset()
                    attempt(K.box_i(pos[-1], e_labels, d))
            elif move == "dia_i":
                d = rng.choice(pool)
                pos = d.conclusion.position
                lengths = [
                    n
                    for n in (0, 1, 2)
                    if n <= len(pos) and _beta_len_ok(system.logic, n)
                ]
                if lengths:
                    n = rng.choice(lengths)
                    beta = pos[len(pos) - n :]
                    eprem = K.ehyp(next(labels), pos) if system.partial else None
                    attempt(K.dia_i(beta, d, eprem))
            elif move == "dia_e":
                pos = random_position(rng, 1)
                tok = rng.choice(TOKENS)
                lab = next(labels)
                if system.partial:
                    el = next(labels)
                    inner = K.box_e(
                        K.hyp(next(labels), Box(Bottom()), pos),
                        (tok,),
                        K.ehyp(el, pos + (tok,)),
                    )
                    minor = K.bot_i(inner, rng.choice([Atom("p"), Bottom()]), pos)
                    major = K.hyp(next(labels), Dia(Bottom()), pos)
                    attempt(
                        K.dia_e(major, tok, frozenset({lab}), frozenset({el}), minor)
                    )
                else:
                    minor = K.bot_i(
                        K.hyp(lab, Bottom(), pos + (tok,)),
                        rng.choice([Atom("p"), Atom("q")]),
                        pos,
                    )
                    major = K.hyp(next(labels), Dia(Bottom()), pos)
                    attempt(
                        K.dia_e(major, tok, frozenset({lab}), frozenset(), minor)
                    )
        except (ValueError, TypeError):
            pass
    sized = sorted(pool, key=lambda d: sum(1 for _ in d))
    return rng.choice(sized[len(sized) // 2 :])
