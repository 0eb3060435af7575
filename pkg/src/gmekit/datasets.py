"""Seeded synthetic data sets for demonstrations and end-to-end tests.

``clinical_like`` mimics a hospital-stay study: a binary outcome (length of
stay above the median) with a four-level race variable, age, gender and a
treatment group.  Covariate distributions differ by race, so conditioning on
race matters.

``red_cards_like`` mimics a player-level count study: rare red cards over a
varying number of games, driven by a skin-tone rating in ``[0, 1]``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

RACE_LEVELS = ("White", "Latinx", "Black", "Other")
RACE_SHARES = (0.5899, 0.2473, 0.1173, 0.0456)


@dataclass(frozen=True, eq=False)
class Dataset:
    columns: dict[str, np.ndarray]
    schema: dict
    outcome: str
    truth: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(next(iter(self.columns.values())))

    def records(self) -> list[dict[str, Any]]:
        names = list(self.columns)
        return [{k: _py(self.columns[k][i]) for k in names} for i in range(self.n)]

    def to_csv(self, path: str | Path) -> None:
        names = list(self.columns)
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(names)
            for i in range(self.n):
                w.writerow([_fmt(self.columns[k][i]) for k in names])


def _py(v: Any) -> Any:
    return v.item() if isinstance(v, np.generic) else v


def _fmt(v: Any) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def clinical_like(n: int = 1200, seed: int = 7) -> Dataset:
    """Binary long-stay outcome with race, age, gender and group."""
    rng = np.random.Generator(np.random.Philox(seed))
    shares = np.asarray(RACE_SHARES) / sum(RACE_SHARES)  # published shares are rounded
    race_idx = rng.choice(len(RACE_LEVELS), size=n, p=shares)
    race = np.array(RACE_LEVELS, dtype=object)[race_idx]
    age_mean = np.array([62.0, 52.0, 56.0, 49.0])[race_idx]
    age = np.round(np.clip(rng.normal(age_mean, 11.0), 18.0, 95.0), 0)
    gender = np.where(rng.random(n) < 0.48, "M", "F").astype(object)
    p_treat = np.array([0.5, 0.35, 0.4, 0.3])[race_idx]
    group = np.where(rng.random(n) < p_treat, "treatment", "control").astype(object)
    beta_race = np.array([0.0, 0.35, 0.55, 0.2])
    eta = (-2.9 + 0.045 * age + beta_race[race_idx] + 0.25 * (gender == "M") - 0.5 * (group == "treatment"))
    los = np.round(np.exp(1.2 + 0.9 * eta / 3.0 + rng.normal(0.0, 0.5, n)) * 2.0, 1)
    long_stay = (los > np.median(los)).astype(float)
    schema = {
        "columns": [
            {"name": "age", "kind": "metric"},
            {"name": "race", "kind": "categorical", "levels": list(RACE_LEVELS), "reference": "White"},
            {"name": "gender", "kind": "categorical", "levels": ["F", "M"], "reference": "F"},
            {"name": "group", "kind": "categorical", "levels": ["control", "treatment"], "reference": "control"},
        ],
        "interest": "race",
    }
    cols = {"age": age, "race": race, "gender": gender, "group": group, "long_stay": long_stay}
    return Dataset(cols, schema, "long_stay", {"race_shares": list(RACE_SHARES)})


def red_cards_like(n: int = 2000, seed: int = 11, base_rate: float = 0.004, odds_ratio: float = 1.3) -> Dataset:
    """Red-card counts out of games played with per-game probability
    ``base_rate * odds_ratio ** skin``."""
    rng = np.random.Generator(np.random.Philox(seed))
    skin = np.round(rng.integers(0, 9, n) / 8.0, 3)
    games = rng.integers(20, 400, n).astype(float)
    b = float(np.log(odds_ratio))
    p = base_rate * np.exp(b * skin)
    cards = rng.binomial(games.astype(int), p).astype(float)
    schema = {"columns": [{"name": "skin", "kind": "metric"}], "interest": "skin"}
    cols = {"skin": skin, "games": games, "red_cards": cards, "rate": cards / games}
    truth = {"slope": float(base_rate * (np.exp(b) - 1.0)), "base_rate": base_rate, "log_rate_ratio": b}
    return Dataset(cols, schema, "red_cards", truth)
