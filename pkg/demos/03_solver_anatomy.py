"""Inside one decomposition.

Follows a single cube through the solver: how much of each frame the
enhancement factor marks as salient, how the outer loop converges, and
where the energy of the input ends up.  The second half repeats the run
with the input expressed in gray levels instead of [0, 1], which shows why
the intensity scale matters for the reweighted penalties.

    python demos/03_solver_anatomy.py
"""

import numpy as np

from sdd import PipelineConfig, SolverConfig, decompose, generate, standard_scene
from sdd.saliency import asce_stack, enhancement_factor


def describe(y, f, t, trace, label):
    print(f"\n[{label}] {len(trace)} outer iterations")
    for rec in trace.records:
        print(f"  it {rec.iteration:2d}: rel change {rec.rel_change:.2e}, "
              f"residual {rec.residual:.5f}, inner {rec.inner_iters}")
    if not np.all(np.isfinite(t)):
        print("  target component is not finite")
        return
    print(f"  |Y - F| / |Y| = {np.linalg.norm(y - f) / np.linalg.norm(y):.4f}, "
          f"nonzero target entries {np.count_nonzero(t)} of {t.size}")


def main():
    frames, gt = generate(standard_scene(0))
    y = np.stack(frames, axis=2) / 255.0
    cfg = PipelineConfig()

    w = enhancement_factor(asce_stack(y, cfg.asce))
    boosted = w >= 1
    r, c = (int(round(v)) for v in gt.centroids[0][0])
    print(f"enhancement factor: {boosted.mean():.1%} of pixels boosted; "
          f"on the target pixel of frame 0 it is {w[r, c, 0]:.3f}")

    f, t, trace = decompose(y, w, cfg.solver)
    describe(y, f, t, trace, "default, intensities in [0, 1]")
    k = 0
    peak = np.unravel_index(np.argmax(np.abs(t[:, :, k])), t.shape[:2])
    print(f"  strongest target pixel on frame 0 at ({peak[0]}, {peak[1]}), truth at ({r}, {c})")

    # the same cube in gray levels: the shrinkage weights 1 / (|x| + eps) now see
    # residuals two orders of magnitude larger, so almost nothing is shrunk
    gray = cfg.solver.replace(data_scale=255.0, gamma=0.5, k_max=12)
    f2, t2, trace2 = decompose(y, w, gray)
    describe(y, f2, t2, trace2, "gray-level scale, gamma 0.5")
    print("  the residual grows: boosted pixels feed an amplified target back into the fit")


if __name__ == "__main__":
    np.set_printoptions(precision=4)
    main()
