"""Generate a small paired dataset (velocity, stream function, sketch).

Usage: python3 scripts/make_dataset.py [out_dir] [sims]
"""

import sys

from smokeflow.dataset import DatasetConfig, generate


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "dataset_out"
    sims = int(sys.argv[2]) if len(sys.argv) > 2 else 4
    cfg = DatasetConfig(output_dir=out, sims=sims, steps=80, snapshot_every=10, seed=0)
    records = generate(cfg)
    print(f"{len(records)} snapshots -> {out}/manifest.ndjson")


if __name__ == "__main__":
    main()
