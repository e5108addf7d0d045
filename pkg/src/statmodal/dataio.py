"""Dataset files and the external classifier protocol.

World files are CSV.  The header names an optional multiplicity column
"#mult", the input as either one categorical column "x" or rational feature
columns "x.<name>", the actual label "y", and optionally the predicted
label "yhat".  Feature cells hold exact rationals written as integers,
decimals or num/den.  Row order never matters and duplicate rows merge.

External classifiers are plain line filters: the process is started once
per batch, receives one input per line on stdin (feature values separated
by tabs, in schema order), and must answer with exactly one label per line
on stdout, in the same order.  A non-zero exit is a crash; a short, long or
unreadable reply is a protocol violation.
"""

from __future__ import annotations

import csv
import shlex
import subprocess
from decimal import Decimal, localcontext
from fractions import Fraction
from pathlib import Path

from .errors import (AdapterCrashed, MissingAdapter, ParseError,
                     ProtocolViolation, SchemaMismatch, UnknownLabel)
from .model import VAR_X, VAR_Y, VAR_YHAT, Schema
from .values import (Label, NumVec, State, Value, is_valid_label,
                     render_rational)
from .worlds import World, world_from_rows

MULT_COLUMN = "#mult"


# -- reading -----------------------------------------------------------------

def _parse_header(header: list[str], path: str) -> tuple[list[str], Schema]:
    """Column roles and the input schema implied by a header row."""
    seen = set()
    for col in header:
        if col in seen:
            raise ParseError(f"duplicate column {col!r}", line=1, path=path)
        seen.add(col)
    feature_cols = [c for c in header if c.startswith("x.")]
    known = {MULT_COLUMN, "x", VAR_Y, VAR_YHAT} | set(feature_cols)
    unknown = [c for c in header if c not in known]
    if unknown:
        raise ParseError(f"unknown column(s) {unknown}", line=1, path=path)
    if "x" in header and feature_cols:
        raise ParseError("mixing a categorical 'x' column with 'x.<name>' "
                         "feature columns", line=1, path=path)
    if "x" not in header and not feature_cols:
        raise ParseError("no input column ('x' or 'x.<name>')", line=1,
                         path=path)
    if VAR_Y not in header:
        raise ParseError("no 'y' column", line=1, path=path)
    if "x" in header:
        schema = Schema("categorical")
    else:
        schema = Schema("vector", tuple(c[2:] for c in feature_cols))
    return header, schema


def _check_schema(found: Schema, declared: Schema | None, path: str) -> None:
    if declared is None:
        return
    if found.kind != declared.kind:
        raise SchemaMismatch(
            f"{path}: file input is {found.kind}, model declares "
            f"{declared.kind}")
    if found.kind == "vector" and set(found.components) != set(declared.components):
        raise SchemaMismatch(
            f"{path}: feature columns {sorted(found.components)} do not "
            f"match the declared components {sorted(declared.components)}")


def _parse_label_cell(cell: str, column: str, line: int, path: str,
                      alphabet: frozenset[str] | None) -> Label:
    cell = cell.strip()
    if not is_valid_label(cell):
        raise ParseError(f"invalid label {cell!r} in column {column}",
                         line=line, path=path)
    if alphabet is not None and cell not in alphabet:
        raise UnknownLabel(
            f"{path}, line {line}: label {cell!r} outside the declared "
            f"alphabet")
    return Label(cell)


def load_world(path, name: str | None = None,
               schema: Schema | None = None,
               alphabet=None) -> World:
    """Read a world from a CSV file.

    When a schema or alphabet is given the file is validated against them;
    a vector file's feature columns are reordered to the declared component
    order.
    """
    path = Path(path)
    alphabet = frozenset(alphabet) if alphabet is not None else None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", line=1, path=str(path)) from None
        header = [c.strip() for c in header]
        _, found_schema = _parse_header(header, str(path))
        _check_schema(found_schema, schema, str(path))

        column_of = {c: i for i, c in enumerate(header)}
        has_mult = MULT_COLUMN in column_of
        has_yhat = VAR_YHAT in column_of
        if found_schema.kind == "vector":
            order = (schema.components if schema is not None
                     else found_schema.components)
            feature_idx = [column_of[f"x.{comp}"] for comp in order]
        rows: list[State] = []
        for lineno, cells in enumerate(reader, start=2):
            if not cells or all(not c.strip() for c in cells):
                continue
            if len(cells) != len(header):
                raise ParseError(
                    f"expected {len(header)} cells, got {len(cells)}",
                    line=lineno, path=str(path))
            mult = 1
            if has_mult:
                text = cells[column_of[MULT_COLUMN]].strip()
                try:
                    mult = int(text)
                except ValueError:
                    raise ParseError(f"bad multiplicity {text!r}",
                                     line=lineno, path=str(path)) from None
                if mult <= 0:
                    raise ParseError(f"multiplicity must be positive, "
                                     f"got {mult}", line=lineno, path=str(path))
            if found_schema.kind == "vector":
                comps = []
                for idx in feature_idx:
                    cell = cells[idx].strip()
                    try:
                        comps.append(Fraction(cell))
                    except (ValueError, ZeroDivisionError):
                        raise ParseError(
                            f"bad rational {cell!r} in column {header[idx]}",
                            line=lineno, path=str(path)) from None
                xv: Value = NumVec(tuple(comps))
            else:
                xv = _parse_label_cell(cells[column_of["x"]], "x", lineno,
                                       str(path), None)
            assignment = {VAR_X: xv,
                          VAR_Y: _parse_label_cell(cells[column_of[VAR_Y]],
                                                   VAR_Y, lineno, str(path),
                                                   alphabet)}
            if has_yhat:
                assignment[VAR_YHAT] = _parse_label_cell(
                    cells[column_of[VAR_YHAT]], VAR_YHAT, lineno, str(path),
                    alphabet)
            rows.extend([State.of(assignment)] * mult)
    if not rows:
        raise ParseError("file contains no data rows", line=2, path=str(path))
    return world_from_rows(name or path.stem, rows)


# -- writing -----------------------------------------------------------------

def save_world(w: World, path, schema: Schema | None = None) -> None:
    """Write a world as CSV; the inverse of load_world up to row order."""
    first_x = w.entries[0][0].value_of(VAR_X)
    if isinstance(first_x, NumVec):
        if schema is not None and schema.kind == "vector":
            components = schema.components
        else:
            components = tuple(f"c{i}" for i in range(first_x.dim))
        header = [MULT_COLUMN] + [f"x.{c}" for c in components]
        categorical = False
    else:
        header = [MULT_COLUMN, "x"]
        categorical = True
    has_yhat = w.has_variable(VAR_YHAT)
    header.append(VAR_Y)
    if has_yhat:
        header.append(VAR_YHAT)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for s, count in w.entries:
            xv = s.value_of(VAR_X)
            row: list[str] = [str(count)]
            if categorical:
                row.append(xv.render())
            else:
                row.extend(render_rational(c) for c in xv.components)
            row.append(s.value_of(VAR_Y).symbol)
            if has_yhat:
                row.append(s.value_of(VAR_YHAT).symbol)
            writer.writerow(row)


# -- external classifier protocol --------------------------------------------

def render_feature_value(q: Fraction) -> str:
    """Wire rendering of one feature component: exact decimal when the
    rational terminates, else rounded to 27 significant digits."""
    text = render_rational(q)
    if "/" not in text:
        return text
    with localcontext() as ctx:
        ctx.prec = 27
        return str(Decimal(q.numerator) / Decimal(q.denominator))


def render_input(v: Value) -> str:
    """One request line: tab-separated feature values, or the categorical
    symbol."""
    if isinstance(v, NumVec):
        return "\t".join(render_feature_value(c) for c in v.components)
    return v.symbol


def run_adapter(cmd: str, inputs: list[Value],
                alphabet=None, timeout: float | None = None) -> list[Label]:
    """Classify a batch of inputs through an external command.

    The command is started once, fed all request lines, and its reply is
    matched up positionally.
    """
    if not cmd or not cmd.strip():
        raise MissingAdapter("no adapter command configured")
    argv = shlex.split(cmd)
    payload = "".join(render_input(v) + "\n" for v in inputs)
    try:
        proc = subprocess.run(argv, input=payload, capture_output=True,
                              text=True, timeout=timeout)
    except FileNotFoundError as exc:
        raise AdapterCrashed(f"adapter command not found: {argv[0]!r}") from exc
    except subprocess.TimeoutExpired as exc:
        raise AdapterCrashed(f"adapter timed out after {timeout}s") from exc
    if proc.returncode != 0:
        tail = proc.stderr.strip().splitlines()[-3:]
        raise AdapterCrashed(
            f"adapter exited with status {proc.returncode}"
            + (": " + " | ".join(tail) if tail else ""))
    lines = proc.stdout.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) != len(inputs):
        raise ProtocolViolation(
            f"adapter answered {len(lines)} line(s) for {len(inputs)} "
            f"input(s)")
    alphabet = frozenset(alphabet) if alphabet is not None else None
    out: list[Label] = []
    for lineno, line in enumerate(lines, start=1):
        symbol = line.strip()
        if not is_valid_label(symbol):
            raise ProtocolViolation(
                f"adapter reply line {lineno} is not a label: {line!r}")
        if alphabet is not None and symbol not in alphabet:
            raise UnknownLabel(
                f"adapter reply line {lineno}: label {symbol!r} outside "
                f"the declared alphabet")
        out.append(Label(symbol))
    return out


def fill_predictions(w: World, cmd: str, alphabet=None,
                     timeout: float | None = None) -> World:
    """A copy of the world with yhat produced by the classifier adapter.

    Each row is classified individually (duplicates included), so rows that
    were merged stay merged only if the adapter answers them alike, which a
    deterministic classifier does.
    """
    rows = list(w.rows())
    labels = run_adapter(cmd, [s.value_of(VAR_X) for s in rows],
                         alphabet=alphabet, timeout=timeout)
    return world_from_rows(
        w.name, [s.replaced(VAR_YHAT, lab) for s, lab in zip(rows, labels)])
