#!/usr/bin/env python3
"""Print the headline numbers from a directory of experiment outputs.

Usage: scripts/summarize.py [results_dir]
"""

import json
import sys
from pathlib import Path


def main() -> int:
    root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("results")
    if not root.is_dir():
        print(f"no results directory at {root}", file=sys.stderr)
        return 1
    for summary in sorted(root.glob("*/summary.json")):
        data = json.loads(summary.read_text())
        print(f"{summary.parent.name} [{data['experiment']}]")
        for key, val in data["results"].items():
            print(f"  {key}: {val}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
