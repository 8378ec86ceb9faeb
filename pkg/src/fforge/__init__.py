"""Exact and numerical checks for F-manifolds and Frobenius manifolds.

Modules: ``series`` (truncated super power series), ``algebra`` (point
algebras, idempotents, twisting), ``potentials`` (vector potentials, WDVV,
pencils, Euler fields), ``qcoh`` (quantum cohomology of P^r), ``saito``
(A_n unfoldings), ``permutohedral`` (fans, partition homology, correlators)
and ``cli``.
"""

__version__ = "0.1.0"
