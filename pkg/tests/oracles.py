"""Independent oracles and random program generators shared by the tests.

Nothing here goes through the symbolic kernel's own evaluation paths: moments
are brute-forced from raw support lists and polynomials are evaluated through
plain Python arithmetic on their printed form.
"""

from __future__ import annotations

import random
from fractions import Fraction
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
PROGRAMS = ROOT / "programs"
GOLDEN = Path(__file__).resolve().parent / "golden"
SHIPPED = ("geom", "gamble", "gamble2", "miniabra", "fullabra")


# moments ---------------------------------------------------------------------------

def brute_moment(points, powers: dict[int, int]) -> Fraction:
    """E[prod pi_c^k] from an explicit list of (point, probability) pairs."""
    total = Fraction(0)
    for pt, pr in points:
        v = Fraction(pr)
        for c, k in powers.items():
            v *= Fraction(pt[c - 1]) ** k
        total += v
    return total


def matches_points(pattern: str, L: int):
    """Enumerate the L letters one by one (letters outside the pattern are distinct)."""
    letters = list(dict.fromkeys(pattern))
    alphabet = letters + [f"#{n}" for n in range(L - len(letters))]
    return [(tuple(int(ch == c) for ch in pattern), Fraction(1, L)) for c in alphabet]


def multi_indices(arity: int, max_degree: int):
    """All exponent maps over coordinates 1..arity with total degree <= max_degree."""
    def rec(c, left):
        if c > arity:
            yield {}
            return
        for k in range(left + 1):
            for rest in rec(c + 1, left - k):
                yield {c: k, **rest} if k else rest
    yield from rec(1, max_degree)


# random programs -------------------------------------------------------------------

def rand_prob(r: random.Random) -> Fraction:
    d = r.randint(2, 9)
    return Fraction(r.randint(1, d - 1), d)


def linear_program(r: random.Random) -> str:
    """First-order affine updates driven by Bernoulli samples with random parameters."""
    names = ["x", "y", "w"][: r.randint(1, 3)]
    ns = r.randint(1, 2)
    lines = [f"{v}[0] := {r.randint(-3, 3)};" for v in names]
    lines.append(f"while ({names[0]} < 100) do")
    for k in range(ns):
        v1, v0 = r.sample(range(-3, 4), 2)
        lines.append(f"    z{k} ~~ Bern({rand_prob(r)}, {{{v1}, {v0}}});")
    for v in names:
        terms = [str(r.randint(-2, 2))]
        terms += [f"{c}*{u}[-1]" for u in names if (c := r.randint(-2, 2))]
        terms += [f"{c}*z{k}" for k in range(ns) if (c := r.randint(-2, 2))]
        lines.append(f"    {v} := " + " + ".join(terms) + ";")
    lines.append("end")
    return "\n".join(lines) + "\n"


def random_seed(r: random.Random, names) -> str:
    monos = ["*".join(r.choice(names) for _ in range(r.randint(1, 2)))
             for _ in range(r.randint(1, 3))]
    return " + ".join(f"{r.randint(1, 3)}*{m}" for m in monos)


def martingale_program(r: random.Random) -> tuple[str, list[str]]:
    """Independent zero-drift walks, one sample per variable."""
    names = ["x", "y", "w"][: r.randint(1, 3)]
    lines = [f"{v}[0] := {r.randint(-3, 3)};" for v in names]
    lines.append(f"while ({names[0]} < 100) do")
    for k, _ in enumerate(names):
        v1, v0 = r.randint(1, 4), -r.randint(1, 4)
        lines.append(f"    z{k} ~~ Bern({Fraction(-v0, v1 - v0)}, {{{v1}, {v0}}});")
    for k, v in enumerate(names):
        lines.append(f"    {v} := {v}[-1] + {r.randint(1, 3)}*z{k};")
    lines.append("end")
    return "\n".join(lines) + "\n", names


def martingale_seed(r: random.Random, names) -> str:
    chosen = r.sample(names, r.randint(1, len(names)))
    seed = f"{r.randint(-5, 5)} + " + " + ".join(f"{r.randint(1, 4)}*{v}" for v in chosen)
    if len(chosen) >= 2 and r.random() < 0.5:
        seed += f" + {chosen[0]}*{chosen[1]}"
    return seed


_DISTS = ["Bern({p}, {{1, 0}})", "Bern({p}, {{-1, 2}})", "Unif{{-1, 0, 3}}",
          "Table{{-2 -> 1/4, 1 -> 3/4}}"]


def mixed_program(r: random.Random) -> str:
    """Nonlinear updates with history, tuple samples and several distribution kinds."""
    names = ["x", "y"][: r.randint(1, 2)]
    depth = r.randint(1, 2)
    lines = []
    for v in names:
        for k in range(depth):
            lines.append(f"{v}[{k}] := {r.randint(-2, 2)};")
    lines.append(f"while ({names[0]} < 1000) do")
    lines.append(f"    s ~~ {r.choice(_DISTS).format(p=rand_prob(r))};")
    lines.append("    u ~ Table{(1, 0) -> 1/3, (0, 2) -> 1/2, (-1, -1) -> 1/6};")
    for v in names:
        atoms = [f"{u}[-{k}]" for u in names for k in range(1, depth + 1)]
        atoms += ["s", "pi_1(u)", "pi_2(u)"]
        terms = [str(r.randint(-2, 2))]
        for _ in range(r.randint(1, 3)):
            a = r.choice(atoms)
            b = r.choice(atoms) if r.random() < 0.3 else None
            c = r.randint(-2, 2) or 1
            terms.append(f"{c}*{a}" + (f"*{b}" if b else ""))
        lines.append(f"    {v} := " + " + ".join(terms) + ";")
    lines.append("end")
    return "\n".join(lines) + "\n"


def random_draws(prog, r: random.Random, steps: int) -> list[dict]:
    """Concrete draws from each sample's support (probabilities ignored)."""
    from doobsynth.recurrence import build_distribution

    out = []
    supports = {}
    for s in prog.samples:
        d = build_distribution(s.dist)
        supports[s.var] = [(pt, d.arity > 1) for pt, _ in d.support]
    for _ in range(steps):
        draw = {}
        for name, pts in supports.items():
            pt, tup = r.choice(pts)
            draw[name] = pt if tup else pt[0]
        out.append(draw)
    return out
