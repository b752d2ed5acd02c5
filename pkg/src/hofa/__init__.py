"""Exact higher-order Fourier analysis over F_p^n (p in {2, 3, 5}).

Subpackages cover exact linear algebra (fpspace), non-classical
polynomials (ncpoly), multilinear forms (mforms), rank theory (rank),
the integration solver (integrate), symmetrization procedures
(symmetrize), Gowers norms and inverse oracles (analysis), and the
end-to-end cubic-correlation pipeline (pipeline) with a CLI (cli).
"""

__version__ = "0.1.0"
