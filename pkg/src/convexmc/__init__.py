"""MCMC estimation of expectations over convex bodies and log-concave
densities, with explicit non-asymptotic error bounds, certified burn-in
plans, and an exact finite-state laboratory for the underlying spectral
theory."""

__version__ = "0.1.0"
