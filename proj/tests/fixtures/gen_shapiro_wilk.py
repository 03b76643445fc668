"""Regenerates shapiro_wilk.json from scipy.stats.shapiro (reference values)."""
import json
import pathlib

import numpy as np
from scipy import stats

rng = np.random.default_rng(20240517)
cases = []


def add(name, data):
    data = [float(v) for v in data]
    res = stats.shapiro(data)
    cases.append({"name": name, "data": data, "W": float(res.statistic), "p": float(res.pvalue)})


add("n3_basic", [1.0, 2.0, 4.0])
add("n3_near_equal_gaps", [0.0, 1.0, 2.1])
add("n4_integers", [2, 3, 5, 9])
add("n5_skewed", [1, 1.5, 2, 2.5, 10])
for n in (6, 7, 8, 10, 11):
    add(f"n{n}_normal", rng.normal(3.0, 2.0, n))
for n in (12, 14, 20, 30):
    add(f"n{n}_uniform", rng.uniform(-1.0, 1.0, n))
add("n14_counts", [2, 1, 3, 2, 4, 1, 2, 3, 5, 2, 1, 3, 2, 4])
add("n14_times", [9.1, 8.4, 12.7, 7.9, 10.2, 9.9, 8.8, 11.5, 6.7, 9.0, 8.1, 10.8, 7.5, 9.6])
add("n25_exponential", rng.exponential(1.0, 25))
add("n50_lognormal", rng.lognormal(0.0, 0.7, 50))
add("n100_normal", rng.normal(0.0, 1.0, 100))
add("n500_normal", rng.normal(10.0, 0.5, 500))
add("n1000_uniform", rng.uniform(0.0, 1.0, 1000))

out = pathlib.Path(__file__).with_name("shapiro_wilk.json")
out.write_text(json.dumps(cases, indent=1) + "\n")
print(f"wrote {len(cases)} cases to {out}")
