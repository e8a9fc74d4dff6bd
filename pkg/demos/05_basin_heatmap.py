#!/usr/bin/env python3
"""Basin of attraction for Blue success over (beta1, phi).

Estimates the Blue-success basin fraction of the reduced two-population
model on a parameter grid and compares the observed 0 -> 1 transition with
the closed-form stability threshold beta1 = r2 / (1 + sin(Delta*)/2).
Writes the heatmap CSV (first row x values, first column y values).
"""

import numpy as np

from kuracomp import analysis, basin
from kuracomp.models import CentroidCoupling, ModelConfig, centroid_coeffs
from kuracomp.solver import IntegratorSettings


def main():
    cfg = ModelConfig(r1=3.0, r2=2.5, beta2=2.0, mu=0.2, psi=0.0,
                      gamma1=1.0, gamma2=1.0)
    betas = np.linspace(1.2, 4.2, 16)
    phis = np.linspace(-0.6, 0.6, 9)
    spec = basin.BasinSpec(grid=(9, 9),
                           settings=IntegratorSettings(dt_init=0.02,
                                                       t_end=200.0))
    matrix, xs, ys = basin.basin_heatmap("simple-reduced", cfg,
                                         "beta1", betas, "phi", phis, spec)
    basin.heatmap_to_csv(matrix, xs, ys, "demos_05_heatmap.csv",
                         meta={"model": "simple-reduced"})
    print("wrote demos_05_heatmap.csv")
    print("phi      threshold   first beta1 with basin >= 0.5")
    for i, ph in enumerate(phis):
        c = cfg.with_overrides(phi=float(ph))
        co = centroid_coeffs(c, CentroidCoupling.from_config(c), 1.0, 0.0)
        d1 = analysis.delta_star(co.C, co.S, c.mu)
        thr = c.r2 / (1 + 0.5 * np.sin(d1))
        above = np.nonzero(matrix[i] >= 0.5)[0]
        cross = f"{betas[above[0]]:.2f}" if above.size else "none"
        print(f"{ph:+.2f}     {thr:.3f}       {cross}")


if __name__ == "__main__":
    main()
