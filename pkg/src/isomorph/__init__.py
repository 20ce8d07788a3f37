"""Isomorphic data-type refinement for a small first-order functional IR.

The package turns programs over one data representation into programs over an
isomorphic representation, mechanically: register an isomorphism between two
predicate-recognized value sets, derive refined versions of the functions that
traffic in them, simplify the derived bodies with directed rewriting, and push
the change through everything downstream. Every correctness obligation along
the way is discharged by bounded-exhaustive evaluation over a finite value
universe rather than by proof.
"""

__version__ = "0.1.0"
