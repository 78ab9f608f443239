#!/usr/bin/env python3
"""Regenerate the bundled SCM assets (assets/*.scm, assets/reference-study/*)."""
import argparse
import itertools
import json
import pathlib

import numpy as np

ROOT = pathlib.Path(__file__).resolve().parent.parent / "assets"

VARS = [
    ("Traffic", ["Normal", "Medium", "Heavy"]),
    ("Urgency", ["NonUrgent", "Urgent"]),
    ("SocialImpact", ["No", "Yes"]),
    ("Age", ["Young", "Middle", "Old"]),
    ("Gender", ["Female", "Male"]),
    ("Race", ["White", "MiddleEastern", "Other"]),
    ("EmploymentStatus", ["Unemployed", "PartTime", "FullTime", "Student"]),
    ("Education", ["PostGraduate", "College", "HighSchool"]),
    ("FamiliarityWithEnvironment", ["OnceAWeek", "OnceAMonth", "OnceAYear"]),
    ("1stConcernWhileStuckInTraffic", ["ExtraTravelTime", "SpeedReduction", "DelayCost"]),
    ("FinancialConcern", ["No", "Yes"]),
    ("RouteChoice", ["Stay", "NearestExit", "OtherExit"]),
]

# (source, target, note)
FINAL_EDGES = [
    ("Traffic", "RouteChoice", "congestion level drives the exit decision"),
    ("SocialImpact", "Traffic", "others' behaviour shapes perceived congestion"),
    ("SocialImpact", "RouteChoice", "others leaving the freeway prompts leaving"),
    ("SocialImpact", "1stConcernWhileStuckInTraffic", "others' behaviour shapes the main worry"),
    ("Gender", "Education", "demographic cause of schooling"),
    ("Gender", "RouteChoice", "direct demographic effect on the decision"),
    ("Education", "EmploymentStatus", "schooling shapes employment"),
    ("Age", "EmploymentStatus", "age shapes employment"),
    ("Age", "RouteChoice", "direct demographic effect on the decision"),
    ("Race", "EmploymentStatus", "demographic cause of employment"),
    ("Race", "1stConcernWhileStuckInTraffic", "demographic cause of the main worry"),
    ("EmploymentStatus", "Urgency", "work obligations create time pressure"),
    ("Urgency", "RouteChoice", "time pressure drives the exit decision"),
    ("Race", "Education", "needed so that {Age, Gender, Race} is the minimal set for Education"),
    ("Age", "Education", "needed so that {Age, Gender, Race} is the minimal set for Education"),
    ("Urgency", "Traffic", "needed so that {SocialImpact, Urgency} is the minimal set for Traffic"),
]

PILOT_ONLY = [
    ("Traffic", "1stConcernWhileStuckInTraffic", "pilot only; removed in the final model"),
    ("1stConcernWhileStuckInTraffic", "RouteChoice", "pilot only; removed in the final model"),
]

HEADER = "dagfile v1\n"


def var_lines(variables, refs=None):
    refs = refs or {}
    out = []
    for name, levels in variables:
        ref = refs.get(name, levels[0])
        out.append(f"var {name} levels={','.join(levels)} ref={ref}")
    return out


def edge_lines(edges):
    return [f"edge {s} -> {t}  # {note}" if note else f"edge {s} -> {t}" for s, t, note in edges]


def fmt(p):
    return f"{p:.6f}".rstrip("0").rstrip(".") if p not in (0.0, 1.0) else str(int(p))


def normalized_row(row):
    row = np.round(np.asarray(row, dtype=float), 6)
    row[-1] = round(1.0 - row[:-1].sum(), 6)
    assert row[-1] > 0
    return row


def cpt_lines(variables, edges, tables):
    levels = dict(variables)
    out = []
    for child, child_levels in variables:
        parents = sorted(s for s, t, _ in edges if t == child)
        table = tables[child]
        for combo in itertools.product(*[range(len(levels[p])) for p in parents]):
            assign = ",".join(f"{p}={levels[p][c]}" for p, c in zip(parents, combo))
            row = normalized_row(table(dict(zip(parents, combo))))
            out.append(f"cpt {child} | {assign} : {','.join(fmt(v) for v in row)}")
    return out


def logit_tables(variables, edges, rng, strength, mix=0.3):
    levels = dict(variables)
    tables = {}
    for child, child_levels in variables:
        k = len(child_levels)
        parents = sorted(s for s, t, _ in edges if t == child)
        base = rng.normal(0.0, 0.3, size=k)
        effects = {}
        for p in parents:
            eff = np.zeros((len(levels[p]), k))
            for lv in range(1, len(levels[p])):
                d = rng.normal(size=k)
                d -= d.mean()
                eff[lv] = strength * d / np.linalg.norm(d)
            effects[p] = eff

        def table(assign, base=base, effects=effects, k=k):
            eta = base.copy()
            for p, code in assign.items():
                eta = eta + effects[p][code]
            w = np.exp(eta - eta.max())
            w = w / w.sum()
            # keep every cell reasonably populated
            return (1.0 - mix) * w + mix / k

        tables[child] = table
    return tables


def write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def reference_study(strength, mix):
    rng = np.random.default_rng(20200408)
    refs = {"RouteChoice": "Stay", "Traffic": "Normal", "Urgency": "NonUrgent", "SocialImpact": "No"}
    vl = var_lines(VARS, refs)
    tables = logit_tables(VARS, FINAL_EDGES, rng, strength, mix)
    d = ROOT / "reference-study"
    write(d / "final.dag", HEADER + "\n".join(vl + edge_lines(FINAL_EDGES)) + "\n")
    write(d / "pilot.dag", HEADER + "\n".join(vl + edge_lines(FINAL_EDGES + PILOT_ONLY)) + "\n")
    write(d / "final.scm",
          HEADER + "\n".join(vl + edge_lines(FINAL_EDGES) + cpt_lines(VARS, FINAL_EDGES, tables)) + "\n")
    study = {
        "outcome": "RouteChoice",
        "outcome_levels": ["NearestExit"],
        "outcome_label": "nearest exit",
        "treatments": ["Traffic", "SocialImpact", "Urgency", "EmploymentStatus", "Education"],
        "unit": "participant x scenario response",
    }
    write(d / "study.json", json.dumps(study, indent=2) + "\n")


def fixed(variables, edges, rows):
    tables = {child: (lambda assign, child=child: rows[child][tuple(assign[p] for p in
                      sorted(s for s, t, _ in edges if t == child))]) for child, _ in variables}
    return HEADER + "\n".join(var_lines(variables) + edge_lines(edges) + cpt_lines(variables, edges, tables)) + "\n"


def small_scenarios():
    tri_vars = [("Z", ["z0", "z1"]), ("X", ["x0", "x1"]), ("Y", ["y0", "y1"])]
    tri_edges = [("Z", "X", ""), ("Z", "Y", ""), ("X", "Y", "")]
    tri = {
        "Z": {(): [0.6, 0.4]},
        "X": {(0,): [0.8, 0.2], (1,): [0.25, 0.75]},
        # parents sorted: X, Z
        "Y": {(0, 0): [0.9, 0.1], (0, 1): [0.6, 0.4], (1, 0): [0.8, 0.2], (1, 1): [0.4, 0.6]},
    }
    write(ROOT / "confounded-triangle.scm", fixed(tri_vars, tri_edges, tri))

    col_vars = [("X", ["x0", "x1"]), ("Y", ["y0", "y1"]), ("C", ["c0", "c1"])]
    col_edges = [("X", "C", ""), ("Y", "C", "")]
    col = {
        "X": {(): [0.5, 0.5]},
        "Y": {(): [0.5, 0.5]},
        "C": {(0, 0): [0.9, 0.1], (0, 1): [0.3, 0.7], (1, 0): [0.3, 0.7], (1, 1): [0.1, 0.9]},
    }
    write(ROOT / "collider-trap.scm", fixed(col_vars, col_edges, col))


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--strength", type=float, default=1.2, help="logit distance per parent level")
    ap.add_argument("--mix", type=float, default=0.5, help="weight of the uniform component in every CPT row")
    args = ap.parse_args()
    reference_study(args.strength, args.mix)
    small_scenarios()
