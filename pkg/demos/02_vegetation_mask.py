"""
From raw pixels to a vegetation mask
====================================

Shows the masking pipeline one step at a time: per-channel
standardization, the excess-green field 2G - R - B, strict thresholding,
and the fixed erosion/dilation cleanup. Intermediate masks are written as
PGM files to demo_output/vegmask/.
"""

from pathlib import Path

from fieldaug import tinytrain as tt
from fieldaug import vegmask as vm
from fieldaug.imagecore import normalize_image, save_ppm
from fieldaug.vegmask import mask_to_pgm

out_dir = Path("demo_output/vegmask")
out_dir.mkdir(parents=True, exist_ok=True)

scene = tt.make_synthetic_corpus(1, size=48, seed=5)[0]
(out_dir / "scene.ppm").write_bytes(save_ppm(scene))

norm = normalize_image(scene)
print("standardized image: per-channel mean ~ 0, std ~ 1")
print("  means:", norm.reshape(-1, 3).mean(axis=0))
print("  stds: ", norm.reshape(-1, 3).std(axis=0))

field = vm.excess_green(norm)
print(f"excess green field: min {field.min():.2f}, max {field.max():.2f}")

raw = vm.binarize(field, theta=0.0)
(out_dir / "mask_raw.pgm").write_bytes(mask_to_pgm(raw))
print(f"raw mask marks {vm.vegetation_fraction(raw):.1%} of pixels")

# the refinement schedule: 2 rounds of (2,2) erosion kill speckle, then
# 4 rounds of (6,6) dilation grow the surviving plant regions back out
refined = vm.refine_mask(raw)
(out_dir / "mask_refined.pgm").write_bytes(mask_to_pgm(refined))
print(f"refined mask marks {vm.vegetation_fraction(refined):.1%} of pixels")

eroded = vm.erode(raw, 2, 2)
print(f"after first erosion alone: {vm.vegetation_fraction(eroded):.1%}")
print("wrote scene.ppm, mask_raw.pgm, mask_refined.pgm to", out_dir)
