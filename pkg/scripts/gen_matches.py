"""Write a pattern-matching program (the monkey-typing example) for any pattern.

    python3 scripts/gen_matches.py ABRACADABRA L > programs/fullabra.spp
    python3 scripts/gen_matches.py 111 2 > programs/miniabra.spp
"""

import argparse


def borders(pattern: str) -> set[int]:
    n = len(pattern)
    return {k for k in range(n + 1) if pattern[:k] == pattern[n - k:]}


def render(pattern: str, size: str) -> str:
    n = len(pattern)
    symbolic = not size.isdigit()
    out = [f"# Waiting time for the pattern {pattern!r} over an alphabet of size {size}."]
    if symbolic:
        out.append(f"param {size} : int in [{len(set(pattern))}, inf);")
    out.append("match0[0] := 1;")
    out += [f"match{k}[0] := 0;" for k in range(1, n + 1)]
    out.append(f"while (match{n} = 0) do")
    out.append(f'    s ~ Matches("{pattern}", {size});')
    out += [f"    match{k} := match{k - 1}[-1] * pi_{k}(s);" for k in range(n, 0, -1)]
    out.append("end")
    seed = " + ".join(["1"] + [f"{size}^{k}*match{k}" if k > 1 else f"{size}*match1"
                               for k in range(1, n + 1)])
    total = " + ".join(["1"] + [f"{size}^{k}" if k > 1 else size for k in range(1, n)])
    out.append(f"#seed: {seed}")
    out.append(f"#hint every: match{n} = 0")
    out.append("#hint every: match0 = 1")
    out.append(f"#hint at-exit: match{n} = 1")
    b = borders(pattern)
    for k in range(n):
        out.append(f"#hint implies: match{n} = 1 -> match{k} = {int(k in b)}")
    out.append(f"#variant: {total} + {size}^{n} - ({seed}), {size}^{n + 1}, 1/{size}")
    out.append("#solve-for: E[tau]")
    if symbolic:
        out.append(f"#sim: {size}={max(2, len(set(pattern)))}")
    return "\n".join(out) + "\n"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("pattern")
    ap.add_argument("size", help="alphabet size: an integer or a parameter name")
    args = ap.parse_args()
    print(render(args.pattern, args.size), end="")


if __name__ == "__main__":
    main()
