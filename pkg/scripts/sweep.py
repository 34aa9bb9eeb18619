"""Run a preset or TOML-configured sweep and write the report next to it.

    python scripts/sweep.py --preset reduced --workers 4 --output-dir results/reduced
    python scripts/sweep.py --config configs/desk.toml

The paper preset (1,400 cells x 100 reps x 2e5 events) needs roughly
1.4e5 run-seconds; budget about 40 core-hours.
"""

import sys

from mmflab.cli import main

if __name__ == "__main__":
    sys.exit(main(["-v", "sweep", "--report", *sys.argv[1:]]))
