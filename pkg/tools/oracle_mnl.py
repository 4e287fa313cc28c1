"""Independent cross-check for the reference synthetic specification.

Deliberately avoids the package: reads the CSV with the csv module,
hard-codes the design matrix for the reference spec and maximizes the
likelihood with scipy's BFGS under numeric differentiation.  Used once
to freeze the golden numbers asserted by the test suite; not a runtime
dependency.
"""

from __future__ import annotations

import csv
import sys
from pathlib import Path

import numpy as np
from scipy import optimize

ALTS = ("car", "bus", "air", "rail")
FREE = ("asc_bus", "asc_air", "asc_rail", "b_time", "b_cost", "b_access", "b_time_business")


def load(csv_path: str):
    with open(csv_path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    n = len(rows)
    avail = np.zeros((n, 4))
    choice = np.zeros(n, dtype=int)
    time = np.zeros((n, 4))
    cost = np.zeros((n, 4))
    access = np.zeros((n, 4))
    business = np.zeros(n)
    for i, r in enumerate(rows):
        for j, a in enumerate(ALTS):
            avail[i, j] = float(r[f"av_{a}"])
            time[i, j] = float(r[f"time_{a}"])
            cost[i, j] = float(r[f"cost_{a}"])
            if a != "car":
                access[i, j] = float(r[f"access_{a}"])
        token = r["choice"].strip()
        choice[i] = ALTS.index(token) if token in ALTS else int(float(token)) - 1
        business[i] = float(r["business"])
    return avail, choice, time, cost, access, business


def negll(theta, avail, choice, time, cost, access, business):
    asc = np.array([0.0, theta[0], theta[1], theta[2]])
    v = (
        asc[None, :]
        + theta[3] * time
        + theta[4] * cost
        + theta[5] * access
        + theta[6] * time * business[:, None]
    )
    v = np.where(avail > 0, v, -np.inf)
    m = v.max(axis=1, keepdims=True)
    ev = np.exp(v - m)
    p = ev / ev.sum(axis=1, keepdims=True)
    return -np.log(p[np.arange(len(choice)), choice]).sum()


def main() -> None:
    csv_path = sys.argv[1] if len(sys.argv) > 1 else str(
        Path(__file__).resolve().parents[1] / "data/synthetic/modechoice.csv"
    )
    data = load(csv_path)
    res = optimize.minimize(
        negll, np.zeros(7), args=data, method="BFGS",
        options={"gtol": 1e-8, "maxiter": 2000},
    )
    ll = -res.fun
    k, n = 7, len(data[1])
    print(f"converged: {res.success} ({res.message})")
    print(f"LL  = {ll:.6f}")
    print(f"AIC = {2 * k - 2 * ll:.6f}")
    print(f"BIC = {k * np.log(n) - 2 * ll:.6f}")
    for name, est in zip(FREE, res.x):
        print(f"  {name:18s} {est: .6f}")
    print(f"VoT = {res.x[3] / res.x[4]:.6f}")
    print(f"null LL = {-np.log(data[0].sum(axis=1)).sum():.6f}")


if __name__ == "__main__":
    main()
