"""Standard fund versus distributed firm on the same company draws.

Run: python3 demos/compare_models.py [trials]
"""

import csv
import io
import sys
from pathlib import Path

from distvc.experiment.config import load_config
from distvc.experiment.runner import run_compare

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 40
cfg = load_config(Path(__file__).resolve().parent.parent / "configs" / "compare.yaml")
out = run_compare(cfg.with_overrides(trials=trials))
summary = list(csv.DictReader(io.StringIO(out["comparison_summary.csv"])))

print(f"{trials} paired trials; both firms see identical company outcomes per trial.\n")
cols = ["mean_lp_net_dpi", "median_lp_net_dpi", "mean_fees_paid", "mean_carry_paid",
        "mean_admin_costs", "fees_over_volume"]
print(f"{'':<22}" + "".join(f"{r['model']:>20}" for r in summary))
for c in cols:
    print(f"{c:<22}" + "".join(f"{float(r[c]):>20,.4f}" for r in summary))
