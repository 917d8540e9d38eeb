"""Synthetic mixed-type table with two planted groups of correlated attributes.

Group one ties ``age``, ``income`` and ``job`` together; group two ties
``region``, ``language`` and ``temperature``.  ``hours`` and ``member`` are
independent of everything else.  Marginals loosely follow census data: a
right-skewed age and working hours with a strong peak at 40.
"""

from __future__ import annotations

import numpy as np

from .table import Dataset

JOBS = ("clerk", "technician", "engineer", "manager", "director")
REGIONS = ("north", "south", "east", "west", "central")
LANGUAGES = {
    "north": ("nordic", "common"),
    "south": ("southern", "common"),
    "east": ("eastern", "southern"),
    "west": ("western", "common"),
    "central": ("common", "eastern"),
}
REGION_TEMPERATURE = {"north": 4.0, "south": 22.0, "east": 12.0, "west": 15.0, "central": 9.0}

PLANTED_GROUPS = (("age", "income", "job"), ("region", "language", "temperature"))


def make_synthetic(n: int = 5000, seed: int = 0) -> Dataset:
    rng = np.random.default_rng(seed)
    age = np.clip(np.round(17 + rng.gamma(3.0, 7.0, size=n)), 17, 90)
    income = np.round((18_000 + 900 * (age - 18) + rng.normal(0, 9_000, size=n)) / 100) * 100
    income = np.maximum(income, 8_000)
    bracket = np.digitize(income, np.quantile(income, [0.3, 0.55, 0.75, 0.9]))
    noisy = rng.random(n) < 0.2
    bracket = np.where(noisy, rng.integers(0, len(JOBS), size=n), bracket)
    job = np.array(JOBS, dtype=object)[bracket]

    region = rng.choice(np.array(REGIONS, dtype=object), size=n, p=[0.15, 0.25, 0.2, 0.25, 0.15])
    first = rng.random(n) < 0.8
    language = np.array([LANGUAGES[r][0 if f else 1] for r, f in zip(region, first)], dtype=object)
    temperature = np.round(
        np.array([REGION_TEMPERATURE[r] for r in region]) + rng.normal(0, 2.5, size=n), 1
    )

    full_time = rng.random(n) < 0.45
    hours = np.where(full_time, 40, np.clip(np.round(rng.normal(40, 12, size=n)), 1, 99))
    member = rng.choice(np.array(["yes", "no"], dtype=object), size=n, p=[0.35, 0.65])

    return Dataset.from_columns(
        "id",
        [str(i) for i in range(1, n + 1)],
        {
            "age": age,
            "income": income,
            "job": job,
            "region": region,
            "language": language,
            "temperature": temperature,
            "hours": hours,
            "member": member,
        },
        kinds={"job": "categorical", "region": "categorical", "language": "categorical",
               "member": "categorical"},
    )
