"""Coverage: share of devices whose error probability stays below P0 for a
collocated array, nearest-AP small cells and cell-free fusion.

    python3 demos/coverage_walkthrough.py
"""

from dataclasses import replace

from cellfree.experiments import ExperimentConfig
from cellfree.experiments.figures import coverage_point

cfg = replace(ExperimentConfig(), realizations=60, devices_per_realization=30)
print(" N  collocated  small-cell  cell-free")
for N in (1, 2, 4, 8):
    row = coverage_point(cfg, N)
    print(f"{N:2d}  {row[2]:10.3f}  {row[5]:10.3f}  {row[8]:9.3f}")
