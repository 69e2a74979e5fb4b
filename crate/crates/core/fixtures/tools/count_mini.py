"""Independent count of the mini dataset, written to mini/expected_counts.csv."""
import csv
import os

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
path = os.path.join(ROOT, "mini", "triples.csv")
with open(path, newline="", encoding="utf-8") as f:
    rows = list(csv.reader(f))
assert rows[0] == ["from", "rel", "to"]
records = rows[1:]
triples = {tuple(r) for r in records}
subjects = {h for h, _, _ in triples}
objects = {t for _, _, t in triples}
relations = {r for _, r, _ in triples}
counts = [
    ("records", len(records)),
    ("triples", len(triples)),
    ("relations", len(relations)),
    ("subject_entities", len(subjects)),
    ("object_entities", len(objects)),
    ("both_positions", len(subjects & objects)),
    ("distinct_entities", len(subjects | objects)),
    ("subject_plus_object", len(subjects) + len(objects)),
]
with open(os.path.join(ROOT, "mini", "expected_counts.csv"), "w", newline="\n") as f:
    f.write("element,count\n")
    for k, v in counts:
        f.write(f"{k},{v}\n")
