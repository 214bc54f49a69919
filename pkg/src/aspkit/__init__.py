"""Adiabatic state preparation toolkit for small molecular Hamiltonians.

Modules:
    integrals_io: FCIDUMP parsing/writing and spin-orbital integral sets.
    fermion_core: determinant bases, Slater-Condon Hamiltonians, initial Hamiltonians.
    qubit_map: Pauli algebra, Jordan-Wigner mapping, the closed-form two-orbital model.
    gadgets: perturbative gadgets lowering 4-local terms to 2-local ones.
    dynamics: schedules, propagation, gap profiles and minimal-time search.
    cli: command-line front end.
"""

__version__ = "0.1.0"
