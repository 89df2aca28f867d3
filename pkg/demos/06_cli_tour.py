"""
A tour of the command line
==========================

Drives the `fieldaug` CLI through a miniature end-to-end workflow inside
demo_output/cli/: write a corpus, curate a soil bank, batch-augment with
two worker counts (byte-identical outputs), pretrain on synthetic data,
check gradients, benchmark, and sweep augmentation orderings.

Each command writes a key=value manifest next to its outputs.
"""

import filecmp
from pathlib import Path

from fieldaug import tinytrain as tt
from fieldaug.cli import main
from fieldaug.imagecore import save_ppm
from fieldaug.policy import default_policy, save_policy

root = Path("demo_output/cli")
root.mkdir(parents=True, exist_ok=True)

corpus_dir = root / "corpus"
corpus_dir.mkdir(exist_ok=True)
for i, img in enumerate(tt.make_synthetic_corpus(10, size=24, seed=31)):
    (corpus_dir / f"field_{i:03d}.ppm").write_bytes(save_ppm(img))

raw_soil_dir = root / "soil_raw"
raw_soil_dir.mkdir(exist_ok=True)
for i, img in enumerate(tt.make_synthetic_soil(10, size=24, seed=8)):
    (raw_soil_dir / f"soil_{i:03d}.ppm").write_bytes(save_ppm(img))

print("== soilbank: keep images under 5% vegetation")
assert main(["soilbank", "--input", str(raw_soil_dir),
             "--output", str(root / "bank")]) == 0

policy_path = root / "policy.txt"
policy = default_policy(master_seed=2024)
policy.soil_bank_path = "bank"  # relative to the policy file
policy_path.write_text(save_policy(policy))
print("\n== policy file")
print(policy_path.read_text())

print("== augment with 1 worker, then 4 workers")
for workers, out in ((1, "views_w1"), (4, "views_w4")):
    assert main(["augment", "--input", str(corpus_dir),
                 "--output", str(root / out),
                 "--policy", str(policy_path),
                 "--workers", str(workers)]) == 0
names = sorted(p.name for p in (root / "views_w1").iterdir())
same = all(
    filecmp.cmp(root / "views_w1" / n, root / "views_w4" / n, shallow=False)
    for n in names
)
print(f"worker counts 1 and 4 produced identical bytes for {len(names)} views: {same}")

print("\n== gradcheck")
assert main(["gradcheck", "--trials", "5",
             "--manifest", str(root / "gradcheck.manifest.txt")]) == 0

print("\n== pretrain on synthetic data")
config_path = root / "train.cfg"
config_path.write_text(
    "batch_size=16\nlearning_rate=0.3\nepochs=4\nembed_dim=8\n"
    "input_size=16\nseed=5\nmax_steps=24\n"
)
assert main(["pretrain", "--synthetic", "64", "--policy", str(policy_path),
             "--config", str(config_path), "--out", str(root / "model.ckpt")]) == 0
print("trace head:")
print("\n".join((root / "model.ckpt.trace.csv").read_text().splitlines()[:4]))

print("\n== bench (3 repeats, medians)")
assert main(["bench", "--input", str(corpus_dir), "--policy", str(policy_path),
             "--repeat", "3",
             "--manifest", str(root / "bench.manifest.txt")]) == 0

print("\n== order sweep over permutations of three augmentations")
assert main(["order-sweep", "--full", "--names",
             "gaussian_blur,color_jitter,random_erasing",
             "--policy", str(policy_path), "--synthetic", "32",
             "--out-dir", str(root / "sweep"),
             "--steps", "6", "--batch", "8", "--input-size", "16"]) == 0
print("cells.csv:")
print((root / "sweep" / "cells.csv").read_text())
