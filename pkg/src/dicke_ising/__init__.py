"""Simulation toolkit for the Dicke-Ising model.

A chain of N qubits with nearest-neighbour Ising coupling J, collectively
coupled with strength g to a single photon mode (frequency omega0).  The
package provides exact quench dynamics on the truncated Fock x qubit space,
the digital-analog Trotter circuit that emulates it, Lindblad noise on that
circuit, parity-projected Wigner tomography of the resonator, and the
mean-field / instanton analysis of the superradiant transition.

Submodules are imported lazily so that the command-line entry point can
configure threading environment variables before numpy is loaded.
"""

__version__ = "0.1.0"

_SUBMODULES = (
    "model",
    "exact",
    "circuits",
    "noise",
    "wigner",
    "field_theory",
    "config",
    "emit",
    "presets",
    "cli",
)


def __getattr__(name):
    if name in _SUBMODULES:
        import importlib

        module = importlib.import_module(f".{name}", __name__)
        globals()[name] = module
        return module
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(list(globals()) + list(_SUBMODULES))
