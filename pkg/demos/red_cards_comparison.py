"""One question, three models: does skin tone change the red-card rate?

Linear, Poisson (with log games as offset) and logistic (cards out of
games) models answer on different scales.  Averaging the slope of the
expected per-game rate over skin tone in [0, 1] puts all three on the same
scale, so the answers can be compared with each other and with the slope
used to simulate the data.

Run with ``python demos/red_cards_comparison.py [out_dir]``.
"""

from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

from gmekit.cli import run
from gmekit.datasets import red_cards_like

CONFIG = Path(__file__).parent / "configs" / "red_cards.json"


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="gmekit-red-cards-"))
    summary = run(json.loads(CONFIG.read_text()), CONFIG.parent, out)
    truth = red_cards_like().truth["slope"]
    print(f"simulated slope of the per-game rate: {truth:.5f}\n")
    for r in summary["results"]:
        if not r["id"].startswith("effect_"):
            continue
        res = r["result"]
        point = res["point"][0] if isinstance(res["point"], list) else res["point"]
        lo, hi = res["regions"][0]["intervals"][0]
        print(f"{r['id'][7:]:>9}: {point:.5f}  95% HDR [{lo:.5f}, {hi:.5f}]")
    print("\nPoisson predictive probability of 0, 1, 2 cards in a single game:")
    series = json.loads((out / "series.json").read_text())["series"]
    for s in series:
        if s["series_id"].startswith("predictive_poisson"):
            probs = ", ".join(f"{p:.5f}" for p in s["point"])
            print(f"  {s['series_id']:>26}: {probs}")
    print(f"\nplot data written to {out}")


if __name__ == "__main__":
    main()
