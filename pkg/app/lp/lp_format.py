"""
Export and import of the fixed LP text format (Minimize / Subject To / Bounds / End).

Names are rewritten to the characters the format accepts; the reader parses
the subset this module writes, so an exported program can be re-read and
solved to the same optimum.
"""

import logging
import math
import re
from pathlib import Path
from typing import Dict, List, Tuple

from app.core.exceptions import LPModelError
from app.lp.program import INF, LinearProgram, Sense

logger = logging.getLogger(__name__)

_INVALID = re.compile(r"[^A-Za-z0-9_.!\"#$%&()/,;?@'{}|~]")
_SENSES = {"<=": Sense.LE, "=<": Sense.LE, "<": Sense.LE, ">=": Sense.GE, "=>": Sense.GE,
           ">": Sense.GE, "=": Sense.EQ}
_TERMS_PER_LINE = 8


def _safe_names(names: List[str], prefix: str) -> Dict[str, str]:
    mapping: Dict[str, str] = {}
    used = set()
    for name in names:
        safe = _INVALID.sub("_", name)
        if not safe or safe[0].isdigit() or safe[0] in ".eE":
            safe = f"{prefix}{safe}"
        candidate, n = safe, 1
        while candidate in used:
            candidate, n = f"{safe}_{n}", n + 1
        used.add(candidate)
        mapping[name] = candidate
    return mapping


def _number(value: float) -> str:
    if value == INF:
        return "+inf"
    if value == -INF:
        return "-inf"
    return repr(float(value))


def _terms(pairs: List[Tuple[float, str]]) -> List[str]:
    lines, current = [], []
    for coefficient, name in pairs:
        sign = "-" if coefficient < 0 else "+"
        current.append(f"{sign} {repr(abs(float(coefficient)))} {name}")
        if len(current) == _TERMS_PER_LINE:
            lines.append(" ".join(current))
            current = []
    if current:
        lines.append(" ".join(current))
    return lines


def write_lp(lp: LinearProgram) -> str:
    """Render a program in LP text format"""
    var_names = _safe_names([v.name for v in lp.variables], "x")
    con_names = _safe_names([c.name for c in lp.constraints], "c")
    variables = lp.variables
    out: List[str] = [f"\\ Problem: {lp.name}", "Minimize"]

    objective = [(v.obj, var_names[v.name]) for v in variables if v.obj != 0.0]
    if not objective and variables:
        objective = [(0.0, var_names[variables[0].name])]
    body = _terms(objective)
    out.append(" obj: " + (body[0] if body else ""))
    out.extend(f"   {line}" for line in body[1:])

    out.append("Subject To")
    for con in lp.constraints:
        pairs = [(coef, var_names[variables[j].name]) for j, coef in zip(con.columns, con.coefficients)]
        if not pairs:
            if not variables:
                raise LPModelError(f"cannot write empty row '{con.name}' without variables")
            pairs = [(0.0, var_names[variables[0].name])]
        body = _terms(pairs)
        out.append(f" {con_names[con.name]}: {body[0]}")
        out.extend(f"   {line}" for line in body[1:])
        out.append(f"   {con.sense.value} {_number(con.rhs)}")

    out.append("Bounds")
    for v in variables:
        name = var_names[v.name]
        if v.lb == -INF and v.ub == INF:
            out.append(f" {name} free")
        elif v.lb == v.ub:
            out.append(f" {name} = {_number(v.lb)}")
        else:
            out.append(f" {_number(v.lb)} <= {name} <= {_number(v.ub)}")
    out.append("End")
    return "\n".join(out) + "\n"


def write_lp_file(lp: LinearProgram, path: Path | str) -> Path:
    """Write a program to disk for external-solver debugging"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(write_lp(lp), encoding="utf-8")
    logger.info(f"📝 LP written to {path} ({lp.n_variables} variables, {lp.n_constraints} rows)")
    return path


def read_lp(text: str, name: str = "lp") -> LinearProgram:
    """Parse LP text produced by write_lp"""
    sections = _split_sections(text)
    objective = _parse_linear(sections.get("minimize", []), "objective")
    rows = _parse_rows(sections.get("subject to", []))
    bounds = _parse_bounds(sections.get("bounds", []))

    # Bounds lists every written variable in program order
    order = dict.fromkeys(list(bounds) + list(objective) + [v for _, terms, _, _ in rows for v in terms])

    lp = LinearProgram(name)
    for var in order:
        # without a Bounds entry the format default [0, +inf) applies
        lb, ub = bounds.get(var, (0.0, INF))
        lp.add_variable(var, lb, ub, objective.get(var, 0.0))
    for row_name, terms, sense, rhs in rows:
        lp.add_constraint(row_name, list(terms.items()), sense, rhs)
    return lp


def read_lp_file(path: Path | str) -> LinearProgram:
    path = Path(path)
    return read_lp(path.read_text(encoding="utf-8"), name=path.stem)


def _split_sections(text: str) -> Dict[str, List[str]]:
    sections: Dict[str, List[str]] = {}
    current = None
    for raw in text.splitlines():
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        key = line.lower()
        if key in ("minimize", "minimise", "min", "subject to", "st", "s.t.", "bounds", "end"):
            current = {"minimise": "minimize", "min": "minimize", "st": "subject to",
                       "s.t.": "subject to"}.get(key, key)
            if current == "end":
                break
            sections.setdefault(current, [])
            continue
        if current is None:
            raise LPModelError(f"LP text outside of any section: '{line}'")
        sections[current].append(line)
    return sections


def _parse_linear(lines: List[str], label: str) -> Dict[str, float]:
    tokens = " ".join(lines).split()
    if tokens and tokens[0].endswith(":"):
        tokens = tokens[1:]
    return _terms_from_tokens(tokens, label)


def _terms_from_tokens(tokens: List[str], label: str) -> Dict[str, float]:
    terms: Dict[str, float] = {}
    sign, coefficient = 1.0, None
    for token in tokens:
        if token in ("+", "-"):
            sign = 1.0 if token == "+" else -1.0
            continue
        try:
            coefficient = float(token)
            continue
        except ValueError:
            pass
        value = sign * (1.0 if coefficient is None else coefficient)
        terms[token] = terms.get(token, 0.0) + value
        sign, coefficient = 1.0, None
    if coefficient is not None:
        raise LPModelError(f"dangling number in {label}")
    return terms


def _parse_rows(lines: List[str]) -> List[Tuple[str, Dict[str, float], Sense, float]]:
    rows = []
    tokens = " ".join(lines).split()
    i = 0
    while i < len(tokens):
        if not tokens[i].endswith(":"):
            raise LPModelError(f"expected constraint name, got '{tokens[i]}'")
        row_name = tokens[i][:-1]
        i += 1
        body: List[str] = []
        while i < len(tokens) and tokens[i] not in _SENSES:
            body.append(tokens[i])
            i += 1
        if i + 1 >= len(tokens):
            raise LPModelError(f"constraint '{row_name}' has no sense")
        sense = _SENSES[tokens[i]]
        rhs = _parse_number(tokens[i + 1])
        i += 2
        rows.append((row_name, _terms_from_tokens(body, row_name), sense, rhs))
    return rows


def _parse_bounds(lines: List[str]) -> Dict[str, Tuple[float, float]]:
    bounds: Dict[str, Tuple[float, float]] = {}
    for line in lines:
        parts = line.split()
        if len(parts) == 2 and parts[1].lower() == "free":
            bounds[parts[0]] = (-INF, INF)
        elif len(parts) == 3 and parts[1] == "=":
            value = _parse_number(parts[2])
            bounds[parts[0]] = (value, value)
        elif len(parts) == 5 and parts[1] == "<=" and parts[3] == "<=":
            bounds[parts[2]] = (_parse_number(parts[0]), _parse_number(parts[4]))
        elif len(parts) == 3 and parts[1] in (">=", "<="):
            lb, ub = bounds.get(parts[0], (0.0, INF))
            value = _parse_number(parts[2])
            bounds[parts[0]] = (value, ub) if parts[1] == ">=" else (lb, value)
        else:
            raise LPModelError(f"unsupported bound line '{line}'")
    return bounds


def _parse_number(token: str) -> float:
    lowered = token.lower()
    if lowered in ("+inf", "inf", "+infinity", "infinity"):
        return INF
    if lowered in ("-inf", "-infinity"):
        return -INF
    value = float(token)
    if math.isnan(value):
        raise LPModelError("NaN in LP text")
    return value
