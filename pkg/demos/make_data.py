"""Write the synthetic CSV files used by the bundled run configurations."""

from __future__ import annotations

from pathlib import Path

from gmekit.datasets import clinical_like, red_cards_like

HERE = Path(__file__).parent / "configs"

if __name__ == "__main__":
    clinical_like().to_csv(HERE / "clinical.csv")
    red_cards_like().to_csv(HERE / "red_cards.csv")
    print(f"wrote {HERE / 'clinical.csv'} and {HERE / 'red_cards.csv'}")
