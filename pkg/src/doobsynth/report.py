"""Text and JSON renderings of an analysis.

The text form is produced from the same dictionary as the JSON form, so the
two always carry the same content.
"""

from __future__ import annotations

import json


def render_json(d: dict) -> str:
    return json.dumps(d, indent=2, sort_keys=True) + "\n"


def _section(out: list[str], title: str, lines) -> None:
    out.append(title)
    out.extend(f"  {ln}" for ln in lines)


def _cond_line(c: dict) -> str:
    s = f"{c['name']}: {c['status']}"
    if c.get("bound") is not None:
        s += f", bound {c['bound']}"
    if c.get("variant") is not None:
        v = c["variant"]
        s += f", variant {v['v']} (K = {v['K']}, eps = {v['eps']})"
    if c.get("detail"):
        s += f" [{c['detail']}]"
    return s


def render_text(d: dict) -> str:
    out = [f"PROGRAM {d['program']}", f"STATUS  {d['status']}"]
    if d.get("seed") is not None:
        out.append(f"SEED    {d['seed']}")
    for w in d.get("warnings", []):
        out.append(f"WARNING {w}")
    if d.get("recurrences"):
        _section(out, "RECURRENCES", d["recurrences"])
    m = d.get("martingale")
    if m is not None:
        _section(out, "MARTINGALE", [f"M_i = {m['M_i']}", f"M_0 = {m['M_0']}",
                                     f"M_i - M_(i-1) = {m['increment']}",
                                     f"check: {m['check']}"])
    if d.get("side_conditions"):
        lines = [_cond_line(c) for c in d["side_conditions"]]
        if d.get("obligations"):
            lines.append("open obligations: " + ", ".join(c["name"] for c in d["obligations"])
                         + (" (assumed)" if d.get("assumed") else ""))
        _section(out, "SIDE CONDITIONS", lines)
    if d.get("fact") is not None:
        _section(out, "OST FACT", [f"{d['fact']['lhs']} = {d['fact']['rhs']}"])
    if d.get("hints"):
        _section(out, "HINTS", d["hints"])
    if d.get("steps"):
        _section(out, "SIMPLIFICATION",
                 [f"{s['label']}: {s['lhs']} = {s['rhs']}" for s in d["steps"]])
    f = d.get("final")
    if f is not None:
        lines = [f"{f['status']}: {f['lhs']} = {f['rhs']}"]
        if d.get("solved") is not None:
            s = d["solved"]
            kind = "relational" if s["relational"] else "closed form"
            lines.append(f"{kind}: {s['target']} = {s['closed_form']}")
        elif f.get("unknowns"):
            lines.append("unknowns: " + ", ".join(f["unknowns"]))
        _section(out, "FINAL FACT", lines)
    if d.get("validation"):
        _section(out, "VALIDATION",
                 [f"{v['fact']}: {v['verdict']} lhs {v['lhs']:.6g} rhs {v['rhs']:.6g} "
                  f"stderr {v['stderr']:.3g} ({v['trials']} trials, {v['censored']} censored)"
                  for v in d["validation"]])
    if d.get("rule_trace"):
        _section(out, "RULE TRACE", d["rule_trace"])
    if d.get("error"):
        out.append(f"ERROR   {d['error']}")
    return "\n".join(out) + "\n"


def render(d: dict, fmt: str) -> str:
    return render_json(d) if fmt == "json" else render_text(d)


def render_table(rows: list[dict], columns: list[str]) -> str:
    """Plain fixed-width table; an empty row list still prints the header."""
    widths = {c: max([len(c)] + [len(str(r.get(c, ""))) for r in rows]) for c in columns}
    line = lambda r: "  ".join(str(r.get(c, "")).ljust(widths[c]) for c in columns).rstrip()
    out = [line({c: c for c in columns})]
    out += [line(r) for r in rows]
    return "\n".join(out) + "\n"
