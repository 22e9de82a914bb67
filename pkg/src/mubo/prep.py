"""Recipes that turn raw UCI files into binary CSVs with a ``label`` column.

Every recipe reads the file layout distributed by the UCI repository
(no header row, label in the last column unless noted) and writes a CSV
whose header is the feature names followed by ``label`` with values 0/1,
where 1 marks the minority class.

Binarization rules:

abalone
    Rings <= 7 is the minority class (20.09% of 4177 rows). Sex is coded
    I=0, F=1, M=2 so the table keeps its 8 columns.
ionosphere
    "b" (bad radar return) is the minority class (126 of 351 rows).
spambase
    Spam (label 1) is the minority class (1813 of 4601 rows).
gisette
    Takes ``gisette_train.data`` / ``gisette_train.labels``; label -1 is the
    majority class. The first 2475 majority rows and the first 275 minority
    rows (in file order) are kept, giving 2750 rows at 10% minority.
connect4
    "draw" against the rest (6449 of 67557 rows, 9.55%). Cells are coded
    x=1, o=-1, b=0.
"""

from __future__ import annotations

import csv
from pathlib import Path

SEX_CODES = {"I": 0.0, "F": 1.0, "M": 2.0}
ABALONE_COLUMNS = [
    "sex",
    "length",
    "diameter",
    "height",
    "whole_weight",
    "shucked_weight",
    "viscera_weight",
    "shell_weight",
]
CONNECT4_CODES = {"x": 1.0, "o": -1.0, "b": 0.0}


def _read_rows(path):
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]


def _write(path, names, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([*names, "label"])
        w.writerows(rows)
    return path


def _fmt(v: float) -> str:
    return repr(float(v))


def prep_abalone(src, dest, max_minority_rings: int = 7):
    rows = []
    for r in _read_rows(src):
        sex = SEX_CODES[r[0].strip()]
        feats = [sex] + [float(c) for c in r[1:8]]
        label = 1 if int(r[8]) <= max_minority_rings else 0
        rows.append([*map(_fmt, feats), label])
    return _write(dest, ABALONE_COLUMNS, rows)


def prep_ionosphere(src, dest):
    rows = []
    for r in _read_rows(src):
        feats = [float(c) for c in r[:34]]
        rows.append([*map(_fmt, feats), 1 if r[34].strip() == "b" else 0])
    return _write(dest, [f"a{i}" for i in range(1, 35)], rows)


def prep_spambase(src, dest):
    rows = []
    for r in _read_rows(src):
        feats = [float(c) for c in r[:57]]
        rows.append([*map(_fmt, feats), 1 if int(float(r[57])) == 1 else 0])
    return _write(dest, [f"f{i}" for i in range(1, 58)], rows)


def prep_gisette(src, dest, labels=None, n_majority: int = 2475, n_minority: int = 275):
    src = Path(src)
    labels = Path(labels) if labels else src.with_suffix(".labels")
    with src.open(encoding="utf-8") as fh:
        data = [line.split() for line in fh if line.strip()]
    with labels.open(encoding="utf-8") as fh:
        ys = [int(line) for line in fh if line.strip()]
    if len(data) != len(ys):
        raise ValueError(f"{src} has {len(data)} rows but {labels} has {len(ys)} labels")
    rows, kept = [], {0: 0, 1: 0}
    want = {0: n_majority, 1: n_minority}
    for feats, y in zip(data, ys):
        label = 1 if y == 1 else 0
        if kept[label] >= want[label]:
            continue
        kept[label] += 1
        rows.append([*feats, label])
    return _write(dest, [f"g{i}" for i in range(1, len(data[0]) + 1)], rows)


def prep_connect4(src, dest):
    rows = []
    for r in _read_rows(src):
        feats = [CONNECT4_CODES[c.strip()] for c in r[:42]]
        rows.append([*map(_fmt, feats), 1 if r[42].strip() == "draw" else 0])
    return _write(dest, [f"c{i}" for i in range(1, 43)], rows)


RECIPES = {
    "abalone": prep_abalone,
    "ionosphere": prep_ionosphere,
    "spambase": prep_spambase,
    "gisette": prep_gisette,
    "connect4": prep_connect4,
}


def prepare(name: str, src, dest, **kwargs):
    try:
        recipe = RECIPES[name]
    except KeyError:
        raise ValueError(f"unknown dataset recipe {name!r}; choose from {sorted(RECIPES)}") from None
    return recipe(src, dest, **kwargs)
