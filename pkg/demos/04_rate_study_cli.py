"""Run a shipped rate-study configuration the way the command line does.

Equivalent to:  stablesde rate-study --config configs/rate_hoelder.ini --out out/hoelder

Run:  python demos/04_rate_study_cli.py [OUTDIR]
"""
from pathlib import Path
import sys

from stablesde.cli import main

root = Path(__file__).resolve().parents[1]
out = sys.argv[1] if len(sys.argv) > 1 else str(root / "out" / "hoelder")
code = main(["rate-study", "--config", str(root / "configs" / "rate_hoelder.ini"), "--out", out])
print(f"exit status {code}; see {out}/rate_report.csv and {out}/rate.dat")
