"""chistar: exact q-expansions, certified evaluation, Heegner machinery,
inequality certificates and effective special-point searches for the
almost-holomorphic modular function chi* = (E2 - 3/(pi y)) E4 E6 / Delta."""

__version__ = "0.1.0"
