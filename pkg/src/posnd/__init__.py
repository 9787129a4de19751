"""Position-decorated natural deduction for modal logics.

Subpackages/modules:

- ``syntax``: formulas, positions, and their operations.
- ``kernel``: derivation trees, the checker, structural transforms, and the
  built-in axiom derivations, plus the proof file format.
- ``normalizer``: segments, cuts, rank, contractions, and normalization.
- ``semantics``: finite tree models, bounded enumeration, and soundness probes.
- ``translate``: double-negation translation into the intuitionistic fragment
  and a best-effort labelled-sequent export.
- ``cli``: the ``posnd`` command-line interface.
"""

__all__ = ["syntax", "kernel", "normalizer", "semantics", "translate", "cli"]

__version__ = "0.1.0"
