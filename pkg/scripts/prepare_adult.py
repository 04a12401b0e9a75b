"""Convert the raw UCI ``adult.data`` file into the CSV used by the examples.

Keeps the twelve features shown to users in the adult walkthrough, renames
them, maps ``?`` to an empty (missing) cell, and collapses marital status
into Married / Never-Married / Divorced / Separated / Widowed.  Education is
kept as the ordinal ``education-num`` so that quartile binning yields a
``Education <= 9`` (high school or less) bin.

Usage::

    python scripts/prepare_adult.py path/to/adult.data data/adult.csv

The raw file is the one distributed by the UCI repository (it is also
bundled inside the ``responsibly`` wheel as
``responsibly/dataset/adult/adult.data``).
"""
import csv
import sys

RAW_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education-num",
    "marital-status", "occupation", "relationship", "race", "sex",
    "capital-gain", "capital-loss", "hours-per-week", "native-country",
    "income",
]

KEEP = [
    ("Age", "age"),
    ("Workclass", "workclass"),
    ("Education", "education-num"),
    ("Marital Status", "marital-status"),
    ("Occupation", "occupation"),
    ("Relationship", "relationship"),
    ("Race", "race"),
    ("Sex", "sex"),
    ("Capital Gain", "capital-gain"),
    ("Capital Loss", "capital-loss"),
    ("Hours per week", "hours-per-week"),
    ("Country", "native-country"),
    ("Salary", "income"),
]

MARITAL = {
    "Married-civ-spouse": "Married",
    "Married-AF-spouse": "Married",
    "Married-spouse-absent": "Married",
    "Never-married": "Never-Married",
}


def convert(src, dst):
    n = 0
    with open(src, newline="") as fin, open(dst, "w", newline="") as fout:
        writer = csv.writer(fout, lineterminator="\n")
        writer.writerow([name for name, _ in KEEP])
        for line in csv.reader(fin, skipinitialspace=True):
            if not line:
                continue
            rec = dict(zip(RAW_COLUMNS, (v.strip() for v in line)))
            rec["marital-status"] = MARITAL.get(rec["marital-status"], rec["marital-status"])
            rec["income"] = rec["income"].rstrip(".")
            writer.writerow(["" if rec[c] == "?" else rec[c] for _, c in KEEP])
            n += 1
    return n


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    print(f"wrote {convert(sys.argv[1], sys.argv[2])} rows to {sys.argv[2]}")
