#!/usr/bin/env python3
"""Normalize the raw dataset downloads into the CSV schema the CLI expects:
a header row, feature columns, and a trailing `target` column.

Reads from data/raw/, writes wine.csv / pima.csv / liver.csv into data/.
Value tokens are passed through verbatim (no float round-tripping), so the
output is byte-reproducible from the published files.
"""

import csv
import os
import sys

RAW = os.path.join(os.path.dirname(__file__), "..", "data", "raw")
OUT = os.path.join(os.path.dirname(__file__), "..", "data")


def fail(msg):
    sys.stderr.write("prepare_data: %s\n" % msg)
    sys.exit(1)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    print("wrote %s (%d rows)" % (path, len(rows)))


def prepare_wine():
    src = os.path.join(RAW, "winequality-white.csv")
    if not os.path.exists(src):
        fail("missing %s (run fetch_data.sh first)" % src)
    with open(src, newline="") as f:
        rdr = csv.reader(f, delimiter=";")
        header = next(rdr)
        rows = [r for r in rdr if r]
    if len(header) != 12:
        fail("wine: expected 12 columns, got %d" % len(header))
    if len(rows) != 4898:
        fail("wine: expected 4898 data rows, got %d" % len(rows))
    for r in rows:
        if len(r) != 12:
            fail("wine: ragged row %r" % r)
        q = float(r[11])
        if not (0 <= q <= 10):
            fail("wine: quality out of range: %r" % r[11])
    names = [h.strip('"').strip().lower().replace(" ", "_") for h in header[:11]]
    write_csv(os.path.join(OUT, "wine.csv"), names + ["target"], rows)


def prepare_pima():
    src = os.path.join(RAW, "pima-indians-diabetes.data.csv")
    if not os.path.exists(src):
        fail("missing %s (run fetch_data.sh first)" % src)
    with open(src, newline="") as f:
        rows = [r for r in csv.reader(f) if r]
    if len(rows) != 768:
        fail("pima: expected 768 rows, got %d" % len(rows))
    for r in rows:
        if len(r) != 9:
            fail("pima: ragged row %r" % r)
        if r[8] not in ("0", "1"):
            fail("pima: outcome must be 0/1, got %r" % r[8])
        float(r[1])  # glucose parses
    header = ["pregnancies", "glucose", "blood_pressure", "skin_thickness",
              "insulin", "bmi", "diabetes_pedigree", "age", "target"]
    write_csv(os.path.join(OUT, "pima.csv"), header, rows)


def prepare_liver():
    src = os.path.join(RAW, "bupa.data")
    if not os.path.exists(src):
        fail("missing %s (run fetch_data.sh first)" % src)
    with open(src, newline="") as f:
        rows = [r for r in csv.reader(f) if r]
    if len(rows) != 345:
        fail("liver: expected 345 rows, got %d" % len(rows))
    out_rows = []
    for r in rows:
        if len(r) != 7:
            fail("liver: ragged row %r" % r)
        drinks = float(r[5])
        if not (0 <= drinks <= 20):
            fail("liver: drinks out of range: %r" % r[5])
        if r[6] not in ("1", "2"):
            fail("liver: selector must be 1/2, got %r" % r[6])
        # keep the five blood-test features and the drinks target;
        # drop the historical selector column (a train/test split marker)
        out_rows.append(r[:5] + [r[5]])
    header = ["mcv", "alkphos", "sgpt", "sgot", "gammagt", "target"]
    write_csv(os.path.join(OUT, "liver.csv"), header, out_rows)


if __name__ == "__main__":
    prepare_wine()
    prepare_pima()
    prepare_liver()
    print("done")
