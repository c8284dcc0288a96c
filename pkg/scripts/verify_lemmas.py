"""Run the lower-bound construction audits and write a JSON report.

Same checks as ``python -m m3lab verify``; kept as a script so the report
can be regenerated without installing the entry point.
"""
import sys

from m3lab.cli import main

if __name__ == "__main__":
    sys.exit(main(["verify", *(sys.argv[1:] or ["--output", "runs/verify.json"])]))
