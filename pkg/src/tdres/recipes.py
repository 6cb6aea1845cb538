"""Built-in experiment configs reproducing the package's standard figures.

Each recipe is a complete, validating config; estimated runtimes are desk
scale, measured on a single laptop-class core.
"""

from __future__ import annotations

RECIPES = {
    "fig1": {
        "description": "Stokes diagrams (turning points, lines, crossings) for n=1 and n=3",
        "runtime_s": 1,
        "config": {
            "format_version": 1,
            "experiment": "stokes",
            "seed": 0,
            "params": {"models": [{"n": 1, "delta_tilde": 1.0},
                                  {"n": 3, "delta_tilde": 1.0}]},
        },
    },
    "fig2-left": {
        "description": "Numeric vs first-order P_e against drive amplitude (n=1, dt=1, window 100)",
        "runtime_s": 30,
        "config": {
            "format_version": 1,
            "experiment": "resonance-sweep",
            "seed": 0,
            "params": {"n": 1, "delta_tilde": 1.0, "tau0": -100.0, "tauf": 100.0,
                       "alpha_lo": 0.0, "alpha_hi": 0.3, "alpha_count": 25},
        },
    },
    "fig2-right": {
        "description": "Numeric vs first-order P_e against the k=0 amplitude (n=3, dt=1, window 5)",
        "runtime_s": 5,
        "config": {
            "format_version": 1,
            "experiment": "resonance-sweep",
            "seed": 0,
            "params": {"n": 3, "delta_tilde": 1.0, "tau0": -5.0, "tauf": 5.0,
                       "alpha_lo": 0.0, "alpha_hi": 0.8, "alpha_count": 25},
        },
    },
    "fig3": {
        "description": "Resonant vs constant-frequency optimal amplitudes over the gap",
        "runtime_s": 1,
        "config": {
            "format_version": 1,
            "experiment": "harmonic-compare",
            "seed": 0,
            "params": {"delta_lo": 0.5, "delta_hi": 2.0, "delta_count": 16},
        },
    },
    "fig4": {
        "description": "Optimal control and ground-state population trace (dt=1/2, tauf=5, n=1)",
        "runtime_s": 1,
        "config": {
            "format_version": 1,
            "experiment": "optimize",
            "seed": 0,
            "params": {"delta_tilde": 0.5, "n": 1, "tauf": 5.0},
        },
    },
    "fig5": {
        "description": "Fitted vs closed-form oscillation amplitude over the gap (n=1, tauf=5)",
        "runtime_s": 2,
        "config": {
            "format_version": 1,
            "experiment": "fit",
            "seed": 0,
            "params": {"delta_tilde": [0.5, 0.75, 1.0, 1.25], "n": 1, "tauf": 5.0},
        },
    },
    "fig6": {
        "description": "Optimized vs resonance oscillation shapes (n=3, dt=3/2,2,5/2)",
        "runtime_s": 2,
        "config": {
            "format_version": 1,
            "experiment": "fit",
            "seed": 0,
            "params": {"delta_tilde": [1.5, 2.0, 2.5], "n": 3, "tauf": 5.0,
                       "grad_tol": 1e-9},
        },
    },
    "figS-u": {
        "description": "Optimal controls approaching the adiabatic limit (n=1, dt=1/3,2/3,1)",
        "runtime_s": 1,
        "config": {
            "format_version": 1,
            "experiment": "optimize",
            "seed": 0,
            "params": {"delta_tilde": [0.3333333333333333, 0.6666666666666666, 1.0],
                       "n": 1, "tauf": 5.0},
        },
    },
    "figS-fit": {
        "description": "Oscillation fits for the adiabatic-limit controls (n=1)",
        "runtime_s": 2,
        "config": {
            "format_version": 1,
            "experiment": "fit",
            "seed": 0,
            "params": {"delta_tilde": [0.3333333333333333, 0.6666666666666666, 1.0],
                       "n": 1, "tauf": 5.0},
        },
    },
    "figC-energy": {
        "description": "Annealing energy schedules for three coupling pairs (n=1 and 3)",
        "runtime_s": 1,
        "config": {
            "format_version": 1,
            "experiment": "anneal",
            "seed": 0,
            "params": {"kind": "energy", "pairs": [[5.0, 5.0], [5.0, 10.0], [10.0, 5.0]],
                       "ns": [1, 3]},
        },
    },
    "figC-stokes-n1": {
        "description": "Annealing Stokes diagrams on the unit window (n=1)",
        "runtime_s": 1,
        "config": {
            "format_version": 1,
            "experiment": "anneal",
            "seed": 0,
            "params": {"kind": "stokes", "n": 1,
                       "pairs": [[5.0, 5.0], [5.0, 10.0], [10.0, 5.0]]},
        },
    },
    "figC-stokes-n3": {
        "description": "Annealing Stokes diagrams on the unit window (n=3)",
        "runtime_s": 1,
        "config": {
            "format_version": 1,
            "experiment": "anneal",
            "seed": 0,
            "params": {"kind": "stokes", "n": 3,
                       "pairs": [[5.0, 5.0], [5.0, 10.0], [10.0, 10.0]]},
        },
    },
    "figC-fit-n1": {
        "description": "Tuned vs optimizer-fitted complex amplitudes (n=1 schedule)",
        "runtime_s": 1,
        "config": {
            "format_version": 1,
            "experiment": "anneal",
            "seed": 0,
            "params": {"kind": "fit", "n": 1, "dbar_x": 5.0,
                       "dbar_z": [4.0, 5.0, 6.0]},
        },
    },
    "figC-fit-n3": {
        "description": "Tuned vs optimizer-fitted complex amplitudes (n=3 schedule)",
        "runtime_s": 1,
        "config": {
            "format_version": 1,
            "experiment": "anneal",
            "seed": 0,
            "params": {"kind": "fit", "n": 3, "dbar_x": 2.0,
                       "dbar_z": [6.0, 8.0, 10.0]},
        },
    },
    "figD-suppression": {
        "description": "3-level spectrum and first-excited suppression report",
        "runtime_s": 2,
        "config": {
            "format_version": 1,
            "experiment": "multilevel",
            "seed": 0,
            "params": {"dbar": 7.0},
        },
    },
}
