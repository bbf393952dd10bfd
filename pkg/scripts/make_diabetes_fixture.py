"""Regenerate ``src/bootlasso/data/diabetes_quadratic.csv``.

Builds the quadratic expansion of the Efron et al. diabetes data: the 10
baseline covariates (centred and scaled), the squares of the 9 non-binary
covariates and all 45 pairwise interactions, followed by the response.
Needs scikit-learn, which ships the raw diabetes table; the package itself
does not.
"""
from __future__ import annotations

import csv
import itertools
from pathlib import Path

import numpy as np
from sklearn.datasets import load_diabetes

NAMES = ["age", "sex", "bmi", "map", "tc", "ldl", "hdl", "tch", "ltg", "glu"]
OUT = Path(__file__).resolve().parents[1] / "src" / "bootlasso" / "data" / "diabetes_quadratic.csv"


def _std(col: np.ndarray) -> np.ndarray:
    col = col - col.mean()
    return col / col.std(ddof=1)


def main() -> None:
    raw = load_diabetes(scaled=False)
    X = np.column_stack([_std(c) for c in raw.data.T])
    cols = {name: X[:, j] for j, name in enumerate(NAMES)}
    names = list(NAMES)
    feats = [cols[n] for n in NAMES]
    for n in NAMES:
        if n == "sex":
            continue
        names.append(f"{n}^2")
        feats.append(_std(cols[n] ** 2))
    for a, b in itertools.combinations(NAMES, 2):
        names.append(f"{a}:{b}")
        feats.append(_std(cols[a] * cols[b]))
    data = np.column_stack(feats + [raw.target])
    with OUT.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names + ["y"])
        for row in data:
            writer.writerow([repr(float(v)) for v in row])
    print(f"wrote {OUT} ({data.shape[0]} rows, {len(names)} covariates)")


if __name__ == "__main__":
    main()
