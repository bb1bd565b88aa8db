"""Exact analysis of finite-state reversible Markov chains.

Everything here works on small dense transition matrices: stationary
distributions, spectra of the centered transition operator, operator norms
in L1 and L2, total variation convergence, conductance by subset
enumeration, and the conversion arithmetic between the ergodicity notions.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    NotReversible,
    NotStochastic,
    Reducible,
    TooManyStates,
    UnsupportedP,
    ZeroGap,
)

# Exact conductance enumerates all proper subsets; past this it is hopeless.
MAX_ENUMERATION_STATES = 20

_DETAILED_BALANCE_TOL = 1e-10
_UNIT_EIGENVALUE_TOL = 1e-9


@dataclass(frozen=True)
class FiniteChain:
    """Reversible row-stochastic kernel together with its stationary vector."""

    kernel: np.ndarray
    pi: np.ndarray

    @property
    def m(self) -> int:
        return self.kernel.shape[0]


@dataclass(frozen=True)
class SpectralReport:
    """Spectral summary of a chain.

    ``lam`` is the largest eigenvalue of the centered operator restricted off
    the stationary direction (it may be negative), ``opnorm2`` the L2 operator
    norm of the centered operator, ``gap`` = 1 - opnorm2, ``phi`` the exact
    conductance, and ``cheeger_lo``/``cheeger_hi`` the bracket
    (phi^2/2, 2*phi) that must contain 1 - lam.
    """

    lam: float
    opnorm2: float
    gap: float
    phi: float
    cheeger_lo: float
    cheeger_hi: float

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "opnorm2": self.opnorm2,
            "gap": self.gap,
            "phi": self.phi,
            "cheeger_lo": self.cheeger_lo,
            "cheeger_hi": self.cheeger_hi,
        }


@dataclass(frozen=True)
class DiagramReport:
    """Numerical check of the ergodicity conversion arithmetic.

    ``alpha`` is the fitted geometric rate, ``m_uniform`` the fitted uniform
    constant, ``l1_ok`` whether the L1 operator norm stays below
    2 * m_uniform * alpha^n for all tested n, and ``gap_ok`` whether
    gap >= 1 - alpha.
    """

    alpha: float
    m_uniform: float
    n_max: int
    l1_ok: bool
    gap_ok: bool
    worst_l1_slack: float

    @property
    def ok(self) -> bool:
        return self.l1_ok and self.gap_ok


def _as_distribution(w, m: int | None = None, tol: float = 1e-12) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.ndim != 1:
        raise DimensionMismatch(f"expected a vector, got shape {w.shape}")
    if m is not None and w.shape[0] != m:
        raise DimensionMismatch(f"expected length {m}, got {w.shape[0]}")
    if np.min(w) < -tol:
        raise ValueError("distribution has negative mass")
    if abs(w.sum() - 1.0) > tol:
        raise ValueError(f"distribution mass {w.sum()} is not 1 within {tol}")
    return w


def build_chain(kernel, tol: float = 1e-12) -> FiniteChain:
    """Validate a transition matrix and compute its stationary vector.

    Raises NotStochastic if a row fails the sum test, Reducible if the
    stationary vector is not unique (or not strictly positive), and
    NotReversible if detailed balance fails beyond 1e-10.
    """
    kernel = np.asarray(kernel, dtype=float)
    if kernel.ndim != 2 or kernel.shape[0] != kernel.shape[1]:
        raise NotStochastic(f"kernel must be square, got shape {kernel.shape}")
    if np.min(kernel) < -tol:
        raise NotStochastic("kernel has negative entries")
    row_err = np.max(np.abs(kernel.sum(axis=1) - 1.0))
    if row_err > tol:
        raise NotStochastic(f"row sums deviate from 1 by {row_err:.3e}")

    pi = _stationary_vector(kernel, tol)

    db = pi[:, None] * kernel - (pi[:, None] * kernel).T
    worst = np.max(np.abs(db))
    if worst > _DETAILED_BALANCE_TOL:
        raise NotReversible(f"detailed balance violated by {worst:.3e}")

    return FiniteChain(kernel=kernel, pi=pi)


def _stationary_vector(kernel: np.ndarray, tol: float) -> np.ndarray:
    m = kernel.shape[0]
    eigvals, eigvecs = np.linalg.eig(kernel.T)
    unit = np.abs(eigvals - 1.0) < _UNIT_EIGENVALUE_TOL
    if unit.sum() != 1:
        raise Reducible(
            f"eigenvalue 1 has multiplicity {int(unit.sum())}; "
            "stationary vector is not unique"
        )
    pi = np.real(eigvecs[:, unit.argmax()])
    pi = np.abs(pi)
    pi /= pi.sum()

    # Refine with the balance linear system; eig alone can carry noise.
    a = np.vstack([kernel.T - np.eye(m), np.ones((1, m))])
    b = np.zeros(m + 1)
    b[-1] = 1.0
    refined, *_ = np.linalg.lstsq(a, b, rcond=None)
    if np.min(refined) > 0:
        pi = refined / refined.sum()

    residual = np.max(np.abs(pi @ kernel - pi))
    if residual > max(tol, 1e-12):
        raise Reducible(f"stationary residual {residual:.3e} exceeds tolerance")
    if np.min(pi) <= 0:
        raise Reducible("stationary vector has a nonpositive entry")
    return pi


def symmetrized(chain: FiniteChain) -> np.ndarray:
    """Return D^{1/2} K D^{-1/2}, symmetric by reversibility."""
    s = np.sqrt(chain.pi)
    return (s[:, None] * chain.kernel) / s[None, :]


def _centered(chain: FiniteChain) -> np.ndarray:
    """Symmetrized kernel minus the rank-one stationary projection."""
    s = np.sqrt(chain.pi)
    return symmetrized(chain) - np.outer(s, s)


def spectrum_off_stationary(chain: FiniteChain) -> np.ndarray:
    """Eigenvalues of the kernel with the unit (stationary) eigenvalue removed.

    Returned in ascending order; these are the eigenvalues of the centered
    operator restricted off the stationary direction.
    """
    if chain.m < 2:
        return np.zeros(0)
    eigs = np.linalg.eigvalsh(symmetrized(chain))
    return eigs[:-1]


def conductance(chain: FiniteChain, max_states: int = MAX_ENUMERATION_STATES) -> float:
    """Exact conductance by enumeration of all proper subsets.

    min over A with 0 < pi(A) <= 1/2 of  sum_{x in A} pi(x) K(x, A^c) / pi(A).
    """
    m = chain.m
    if m > max_states:
        raise TooManyStates(f"m={m} exceeds enumeration limit {max_states}")
    pi = chain.pi
    flow = pi[:, None] * chain.kernel  # flow[x, y] = pi(x) K(x, y)

    best = np.inf
    n_masks = (1 << m) - 1
    chunk = 1 << 14
    masks = np.arange(1, n_masks, dtype=np.int64)
    bits_template = np.arange(m, dtype=np.int64)
    for start in range(0, masks.size, chunk):
        block = masks[start : start + chunk]
        member = ((block[:, None] >> bits_template) & 1).astype(float)
        mass = member @ pi
        valid = mass <= 0.5 + 1e-15
        if not np.any(valid):
            continue
        member = member[valid]
        mass = mass[valid]
        # flow out of A: sum_{x in A, y not in A} pi(x) K(x, y)
        out = np.einsum("ij,jk,ik->i", member, flow, 1.0 - member)
        best = min(best, float(np.min(out / mass)))
    return best


def analyze(chain: FiniteChain, max_states: int = MAX_ENUMERATION_STATES) -> SpectralReport:
    """Full spectral report: lam, L2 operator norm, gap, conductance, bracket."""
    if chain.m < 2:
        raise TooManyStates("spectral report needs at least 2 states")
    rest = spectrum_off_stationary(chain)
    lam = float(rest[-1])
    opnorm2 = float(np.max(np.abs(rest)))
    gap = max(0.0, 1.0 - opnorm2)
    phi = conductance(chain, max_states=max_states)
    return SpectralReport(
        lam=lam,
        opnorm2=opnorm2,
        gap=gap,
        phi=phi,
        cheeger_lo=phi * phi / 2.0,
        cheeger_hi=2.0 * phi,
    )


def tv_distance(nu, mu) -> float:
    """Total variation distance between two distribution vectors.

    Computes both the supremum-over-sets form (positive part sum) and half
    the L1 distance and insists they agree to 1e-12 before returning.
    """
    nu = _as_distribution(nu)
    mu = _as_distribution(mu, m=nu.shape[0])
    diff = nu - mu
    sup_form = float(np.sum(diff[diff > 0]))
    half_l1 = float(0.5 * np.sum(np.abs(diff)))
    if abs(sup_form - half_l1) > 1e-12:
        raise AssertionError(
            f"TV identity violated: sup form {sup_form} vs half-L1 {half_l1}"
        )
    return half_l1


def power_norm(chain: FiniteChain, n: int, p: int = 2) -> float:
    """Operator norm of the n-step centered operator on L_p(pi), p in {1, 2}.

    p=2: largest absolute eigenvalue of the n-th power of the centered
    symmetrized kernel. p=1: twice the worst TV distance of an n-step row
    from the stationary vector (the norm is attained at scaled point masses
    for reversible chains).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if p == 2:
        mat = np.linalg.matrix_power(_centered(chain), n)
        return float(np.max(np.abs(np.linalg.eigvalsh(mat))))
    if p == 1:
        kn = np.linalg.matrix_power(chain.kernel, n)
        worst = max(tv_distance(kn[x], chain.pi) for x in range(chain.m))
        return 2.0 * worst
    raise UnsupportedP(f"p must be 1 or 2, got {p}")


def tv_convergence_bounds(chain: FiniteChain, nu, n: int) -> dict:
    """TV distance of the n-step distribution against its two norm bounds.

    Returns {"lhs", "bound_l1", "bound_l2"} where lhs = TV(nu K^n, pi),
    bound_l1 = ||P^n - S||_1 * 0.5 * ||d nu/d pi - 1||_1 and bound_l2 the
    same with L2 quantities, both weighted by pi.
    """
    nu = _as_distribution(nu, m=chain.m)
    if n < 1:
        raise ValueError("n must be >= 1")
    pi = chain.pi
    nu_n = nu @ np.linalg.matrix_power(chain.kernel, n)
    nu_n = np.clip(nu_n, 0.0, None)
    nu_n /= nu_n.sum()
    lhs = tv_distance(nu_n, pi)

    g = nu / pi - 1.0
    norm1 = float(np.sum(pi * np.abs(g)))
    norm2 = float(np.sqrt(np.sum(pi * g * g)))
    return {
        "lhs": lhs,
        "bound_l1": power_norm(chain, n, p=1) * 0.5 * norm1,
        "bound_l2": power_norm(chain, n, p=2) * 0.5 * norm2,
    }


def verify_diagram(chain: FiniteChain, n_max: int) -> DiagramReport:
    """Fit (alpha, M) from the chain and check the ergodicity conversions.

    alpha is the L2 operator norm of the centered kernel; M the smallest
    uniform constant making TV(K^n(x, .), pi) <= M alpha^n hold for all
    states and n <= n_max. The report then checks the implied L1 bound
    ||P^n - S||_1 <= 2 M alpha^n and gap >= 1 - alpha.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    alpha = power_norm(chain, 1, p=2)
    if alpha >= 1.0 - 1e-12:
        raise ZeroGap(f"alpha={alpha} leaves no gap; fit undefined")

    kn = chain.kernel.copy()
    tvs = np.empty((n_max, chain.m))
    for n in range(1, n_max + 1):
        if n > 1:
            kn = kn @ chain.kernel
        tvs[n - 1] = [tv_distance(kn[x], chain.pi) for x in range(chain.m)]

    if alpha < 1e-13:
        m_uniform = 0.0
        l1_ok = bool(np.max(tvs) <= 1e-12)
        worst_slack = float(np.max(tvs))
    else:
        rates = alpha ** np.arange(1, n_max + 1)
        m_uniform = float(np.max(tvs / rates[:, None]))
        worst_slack = 0.0
        l1_ok = True
        for n in range(1, n_max + 1):
            l1 = power_norm(chain, n, p=1)
            slack = l1 - 2.0 * m_uniform * rates[n - 1]
            worst_slack = max(worst_slack, slack)
            if slack > 1e-10:
                l1_ok = False

    gap = 1.0 - power_norm(chain, 1, p=2)
    gap_ok = gap >= 1.0 - alpha - 1e-12
    return DiagramReport(
        alpha=alpha,
        m_uniform=m_uniform,
        n_max=n_max,
        l1_ok=l1_ok,
        gap_ok=gap_ok,
        worst_l1_slack=worst_slack,
    )


def lazy_chain(chain: FiniteChain) -> FiniteChain:
    """Mix the kernel with the identity: K' = (K + I)/2, same stationary vector."""
    kernel = 0.5 * (chain.kernel + np.eye(chain.m))
    return FiniteChain(kernel=kernel, pi=chain.pi)


def random_reversible(m: int, rng: np.random.Generator, min_weight: float = 0.05) -> FiniteChain:
    """Random reversible chain from a symmetric positive flow matrix.

    K(x, y) = F(x, y) / rowsum(x) with F symmetric gives detailed balance
    with pi proportional to the row sums; min_weight keeps the chain well
    connected.
    """
    flow = rng.uniform(min_weight, 1.0, size=(m, m))
    flow = 0.5 * (flow + flow.T)
    kernel = flow / flow.sum(axis=1, keepdims=True)
    return build_chain(kernel)


def two_state_chain(a: float, b: float) -> FiniteChain:
    """Chain on {0, 1} with K = [[1-a, a], [b, 1-b]]."""
    if not (0 < a <= 1 and 0 < b <= 1):
        raise ValueError("a and b must lie in (0, 1]")
    return build_chain(np.array([[1 - a, a], [b, 1 - b]]))
