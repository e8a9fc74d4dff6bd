"""Shipped scenario presets and the stylised three-network use case.

The "paper-usecase" network: a hierarchical population (complete 4-ary tree,
two layers, 21 nodes), a non-hierarchical one (Erdos-Renyi, 21 nodes,
p = 0.2), and a tight-knit community (Watts-Strogatz, 21 nodes, 6-neighbour
ring, rewiring 0.4).  Cross links: Blue 1-5 <-> Green 1-5, Blue 6-21 <->
Red 6-21, Red 6-21 <-> Green 6-21 (1-based labels), couplings normalised
as xi_ij = N_i / d_T^(ij).

Intrinsic frequencies are U[0, 1] draws per competitor recentred so the
population means hit the configured (mu, nu) exactly, with the third
population pinned at 0.5; the reduced and networked variants then share
identical effective frequency differences.
"""

from __future__ import annotations

import numpy as np

from ._rng import substream
from .graphs import (assemble, default_partition, gen_erdos_renyi,
                     gen_kary_tree, gen_watts_strogatz,
                     xi_paper_normalization)

__all__ = ["PRESETS", "preset_names", "get_preset", "build_network",
           "sample_omega"]


def sample_omega(sizes, mu, nu, seed, green_constant: float = 0.5):
    """Per-population frequency vectors with exact mean differences.

    Competitor draws are U[0, 1] recentred so mean(pop1) - mean(pop2) = mu
    and, with a third population present, mean(pop1) - mean(pop3) = nu
    around the pinned third-population value.
    """
    n_pops = len(sizes)
    if n_pops == 3:
        m1 = green_constant + nu
    else:
        m1 = 0.5 + 0.5 * mu
    m2 = m1 - mu
    targets = [m1, m2] + ([green_constant] if n_pops == 3 else [])
    out = []
    for p, (n, target) in enumerate(zip(sizes, targets)):
        if n_pops == 3 and p == 2:
            out.append(np.full(n, green_constant))
            continue
        draws = substream(seed, "omega", p).uniform(0.0, 1.0, size=n)
        out.append(draws - draws.mean() + target)
    return out


def build_network(section: dict, master_seed: int):
    """Construct a CoupledNetwork from a config network section."""
    section = dict(section)
    preset = section.pop("preset", None)
    if preset == "paper-usecase":
        base = _paper_usecase_section()
        base.update(section)
        section = base
    elif preset == "paper-2pop":
        base = _paper_2pop_section()
        base.update(section)
        section = base
    elif preset is not None:
        raise ValueError(f"unknown network preset {preset!r}")

    pops = []
    for i, spec in enumerate(section["populations"]):
        kind = spec["kind"]
        if kind == "kary-tree":
            pops.append(gen_kary_tree(spec["branching"], spec["layers"]))
        elif kind == "erdos-renyi":
            pops.append(gen_erdos_renyi(
                spec["n"], spec["p"],
                substream(master_seed, "network", "er", i)))
        elif kind == "watts-strogatz":
            pops.append(gen_watts_strogatz(
                spec["n"], spec["k"], spec["p_rewire"],
                substream(master_seed, "network", "ws", i)))
        elif kind == "explicit":
            from .graphs import Graph

            pops.append(Graph(n=spec["n"],
                              edges=tuple(tuple(e) for e in spec["edges"])))
        else:
            raise ValueError(f"unknown graph kind {kind!r}")

    interlinks = {}
    for key, pairs in section.get("interlinks", {}).items():
        i, j = (int(v) for v in key.split("-"))
        interlinks[(i, j)] = [tuple(p) for p in pairs]

    xi_section = section.get("xi", "paper")
    if xi_section == "paper":
        xi = xi_paper_normalization(pops, interlinks)
    else:
        xi = {}
        for key, value in xi_section.items():
            i, j = (int(v) for v in key.split("-"))
            xi[(i, j)] = float(value)

    if "strategic" in section:
        strategic = [tuple(s) for s in section["strategic"]]
        tactical = [tuple(sorted(set(range(g.n)) - set(s)))
                    for g, s in zip(pops, strategic)]
    else:
        parts = [default_partition(g) for g in pops]
        strategic = [p[0] for p in parts]
        tactical = [p[1] for p in parts]

    omega_spec = section.get("omega", "recentred-uniform")
    if omega_spec == "recentred-uniform":
        omega = sample_omega([g.n for g in pops], section.get("mu", 0.0),
                             section.get("nu", 0.0), master_seed)
    elif isinstance(omega_spec, list):
        omega = [np.asarray(o, dtype=float) for o in omega_spec]
    else:
        raise ValueError(f"unknown omega spec {omega_spec!r}")

    return assemble(pops, interlinks, sigma=section["sigma"], xi=xi,
                    phi=section.get("phi", 0.0), psi=section.get("psi", 0.0),
                    strategic=strategic, tactical=tactical, omega=omega)


def network_to_config(net) -> dict:
    """Serialise a CoupledNetwork to an explicit config network section.

    The result rebuilds an identical network through ``build_network``
    regardless of the master seed (graphs, links, frequencies all stored
    verbatim).
    """
    section = {
        "populations": [{"kind": "explicit", "n": g.n,
                         "edges": [list(e) for e in g.edges]}
                        for g in net.populations],
        "interlinks": {f"{i}-{j}": [list(p) for p in links.pairs]
                       for (i, j), links in net.interlinks.items()},
        "sigma": [float(s) for s in net.sigma],
        "xi": {f"{i}-{j}": float(v) for (i, j), v in net.xi.items()},
        "phi": float(net.phi),
        "psi": float(net.psi),
        "strategic": [list(s) for s in net.strategic],
        "omega": [[float(w) for w in net.omega[net.nodes_of(p)]]
                  for p in range(net.n_pops)],
    }
    return section


def _paper_usecase_section() -> dict:
    links_bg = [[i, i] for i in range(0, 5)]        # Blue 1-5 <-> Green 1-5
    links_br = [[i, i] for i in range(5, 21)]       # Blue 6-21 <-> Red 6-21
    links_rg = [[i, i] for i in range(5, 21)]       # Red 6-21 <-> Green 6-21
    return {
        "populations": [
            {"kind": "kary-tree", "branching": 4, "layers": 2},
            {"kind": "erdos-renyi", "n": 21, "p": 0.2},
            {"kind": "watts-strogatz", "n": 21, "k": 6, "p_rewire": 0.4},
        ],
        "interlinks": {"0-1": links_br, "0-2": links_bg, "1-2": links_rg},
        "sigma": [4.0, 2.0, 2.0],
        "xi": "paper",
    }


def _paper_2pop_section() -> dict:
    return {
        "populations": [
            {"kind": "kary-tree", "branching": 4, "layers": 2},
            {"kind": "erdos-renyi", "n": 21, "p": 0.2},
        ],
        "interlinks": {"0-1": [[i, i] for i in range(5, 21)]},
        "sigma": [4.0, 2.0],
        "xi": "paper",
    }


def _eco3_params(**overrides) -> dict:
    params = {
        "r1": 3.0, "r2": 2.5, "r3": 1.0, "r3_max": 1.5,
        "beta1": 7.5, "beta2": 0.2, "beta1_min": 0.1,
        "alpha": 2.0, "tau": 1.0, "x1": 0.25,
        "x3": 0.25, "x3_min": 0.125, "x3_max": 0.5,
        "K1": 10.0, "K2": 10.0, "K3": 10.0,
        "mu": 0.25, "nu": -0.25, "phi": 0.5, "psi": 0.0,
        "p_exponent": 1, "P_D": 1e-4,
    }
    params.update(overrides)
    return params


PRESETS = {
    # two-population linearised case study
    "simple-cs": {
        "model": "simple-reduced",
        "params": {"r1": 3.0, "r2": 2.5, "beta1": 2.0, "beta2": 2.0,
                   "gamma1": 1.0, "gamma2": 1.0, "mu": 0.2, "phi": 0.2,
                   "psi": 0.0, "P_D": 1e-4},
        "solver": {"method": "rk45", "t_end": 200.0},
        "task": {"type": "fixed-points"},
    },
    # networked two-population model with synchronisation feedback
    "paper-2pop": {
        "model": "feedback",
        "params": {"r1": 3.0, "r2": 2.5, "beta1": 2.0, "beta2": 2.0,
                   "mu": 0.2, "phi": 0.2, "psi": 0.0, "P_D": 1e-4},
        "network": {"preset": "paper-2pop", "mu": 0.2, "phi": 0.2, "psi": 0.0},
        "solver": {"method": "rk4", "dt_init": 0.01, "t_end": 60.0,
                   "recon_T": 0.0},
        "task": {"type": "simulate", "initial": {"P": [0.5, 0.5],
                                                 "delta": 0.0}},
    },
    # ecology-variant fixed points (no/fixed third population)
    "eco2-supp": {
        "model": "eco2-reduced",
        "params": {"r1": 3.0, "r2": 2.5, "beta1": 7.5, "beta2": 2.0,
                   "alpha": 20.0, "tau": 1.0, "x1": 0.25,
                   "gamma1": 1.0, "gamma2": 1.0, "mu": 0.25, "phi": 0.2,
                   "psi": 0.0, "P_D": 1e-4},
        "solver": {"method": "rk45", "t_end": 200.0},
        "task": {"type": "fixed-points"},
    },
    # dimensional three-population case study
    "eco3-cs": {
        "model": "eco3",
        "params": _eco3_params(),
        "network": {"preset": "paper-usecase", "mu": 0.25, "nu": -0.25,
                    "phi": 0.5, "psi": 0.0},
        "solver": {"method": "rk4", "dt_init": 0.01, "t_end": 100.0,
                   "recon_T": 50.0},
        "task": {"type": "simulate", "initial": {"P": [5.0, 5.0, 5.0]}},
    },
    # scenario (a): weak tactical agility, decision disadvantage -> Red win
    "fig3a": {
        "model": "eco3",
        "params": _eco3_params(beta1=1.5, phi=-np.pi / 2),
        "network": {"preset": "paper-usecase", "mu": 0.25, "nu": -0.25,
                    "phi": -np.pi / 2, "psi": 0.0},
        "solver": {"method": "rk4", "dt_init": 0.01, "t_end": 100.0,
                   "recon_T": 50.0},
        "task": {"type": "simulate", "initial": {"P": [5.0, 5.0, 5.0]}},
    },
    # scenario (b): strong tactical agility, decision advantage -> Blue win
    "fig3b": {
        "model": "eco3",
        "params": _eco3_params(beta1=5.0, phi=np.pi / 2),
        "network": {"preset": "paper-usecase", "mu": 0.25, "nu": -0.25,
                    "phi": np.pi / 2, "psi": 0.0},
        "solver": {"method": "rk4", "dt_init": 0.01, "t_end": 100.0,
                   "recon_T": 50.0},
        "task": {"type": "simulate", "initial": {"P": [5.0, 5.0, 5.0]}},
    },
}


def preset_names() -> list:
    return sorted(PRESETS)


def get_preset(name: str) -> dict:
    import copy

    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; available: {preset_names()}")
    return copy.deepcopy(PRESETS[name])
