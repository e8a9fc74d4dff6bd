#!/usr/bin/env python3
"""Fixed points and victory thresholds of the reduced two-population model.

Walks the case study (gamma1 = gamma2 = 1, psi = 0, beta2 = 2, r1 = 3,
r2 = 2.5, phi = mu = 0.2): tabulates FP1-FP4 with their eigenvalues, prints
the closed-form reduction-rate thresholds, then sweeps beta1 to show the
Blue-victory fixed point gaining stability exactly at the threshold.
"""

import numpy as np

from kuracomp import analysis
from kuracomp.models import ModelConfig
from kuracomp.solver import IntegratorSettings


def main():
    cfg = ModelConfig(r1=3.0, r2=2.5, beta1=2.0, beta2=2.0, mu=0.2,
                      phi=0.2, psi=0.0, gamma1=1.0, gamma2=1.0)
    records = analysis.simple_fixed_points(cfg)
    print("fixed points at beta1 = 2.0:")
    for rec in records:
        eigs = ", ".join(f"{v.real:+.3f}" for v in rec.eigenvalues)
        print(f"  {rec.label}: state = ({rec.state[0]:.4f}, "
              f"{rec.state[1]:.4f}, {rec.state[2]:.4f})  "
              f"[{rec.classification}]  Re(eigs) = {eigs}")

    fp1 = next(r for r in records if r.label == "FP1")
    rep = analysis.stability_thresholds(cfg, fp1.state[2])
    print(f"\nclosed-form thresholds at Delta* = {fp1.state[2]:.4f}:")
    print(f"  Blue victory needs  beta1 > {rep.beta1_threshold:.4f}")
    print(f"  Red victory needs   beta2 > {rep.beta2_threshold:.4f}")
    print(f"  phi window for Blue: ({rep.phi_window[0]:.3f}, "
          f"{rep.phi_window[1]:.3f})")

    print("\nsweep of beta1 (FP1 classification | long-run attractor):")
    values = np.linspace(1.6, 2.6, 11)
    rows = analysis.sweep_bifurcation(
        "simple-reduced", cfg, "beta1", values,
        settings=IntegratorSettings(rtol=1e-8, atol=1e-10, t_end=120.0))
    for v in values:
        fp = [r.record for r in rows if r.record is not None
              and r.record.label == "FP1" and r.param_value == v]
        traj = [r for r in rows if r.record is None and r.param_value == v]
        print(f"  beta1 = {v:.2f}: FP1 {fp[0].classification:9s} | "
              f"trajectory -> {traj[0].attractor}")


if __name__ == "__main__":
    main()
