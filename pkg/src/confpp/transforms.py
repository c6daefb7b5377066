"""Subset-lattice transforms and convolutions.

The additive transform ``(KG)(gamma) = sum_{eta subset gamma} G(eta)`` is the
zeta transform of the subset lattice; its inverse is the signed Moebius
sweep.  Two convolutions accompany it: the disjoint-pair convolution ``*``
(sum over ordered two-partitions) and the covering convolution ``(x)`` (sum
over ordered three-partitions), for which K acts as a pointwise-product
Fourier transform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Configuration, SetFunction, lp_integral
from .errors import GroundMismatchError, ValidationError


def _check_same_ground(G1, G2):
    if not G1.same_ground(G2):
        raise GroundMismatchError("operands live on different grounds")


# ---------------------------------------------------------------------------
# zeta / Moebius sweeps
# ---------------------------------------------------------------------------

def zeta_values(values, n_sites):
    """In-place-style zeta transform: out[mask] = sum over submasks."""
    out = np.array(values, dtype=float)
    for i in range(n_sites):
        bit = 1 << i
        hi = (np.arange(out.size) & bit).astype(bool)
        out[hi] += out[np.arange(out.size)[hi] ^ bit]
    return out


def moebius_values(values, n_sites):
    """Signed inverse sweep of :func:`zeta_values`."""
    out = np.array(values, dtype=float)
    for i in range(n_sites):
        bit = 1 << i
        hi = (np.arange(out.size) & bit).astype(bool)
        out[hi] -= out[np.arange(out.size)[hi] ^ bit]
    return out


def k_transform(G):
    """Sum a set function over all subsets of each configuration.

    ``F(gamma) = sum_{eta subset gamma} G(eta)``, computed by the per-site
    sweep in O(n 2^n).
    """
    return SetFunction(G.ground, zeta_values(G.values, G.ground.n_sites),
                       f"K[{G.label}]")


def k_inverse(F):
    """Moebius inverse: ``G(eta) = sum_{xi subset eta} (-1)^|eta\\xi| F(xi)``.

    Exact two-sided inverse of :func:`k_transform`.
    """
    return SetFunction(F.ground, moebius_values(F.values, F.ground.n_sites),
                       f"Kinv[{F.label}]")


def k_transform_naive(G):
    """Quadratic-time transcription of the defining sum; test oracle."""
    n = G.ground.n_subsets
    out = np.zeros(n)
    for gamma in range(n):
        sub = gamma
        acc = G.values[0]
        while sub:
            acc += G.values[sub]
            sub = (sub - 1) & gamma
        out[gamma] = acc
    return SetFunction(G.ground, out)


def k_inverse_naive(F):
    """Direct signed-sum transcription of the inverse; test oracle."""
    n = F.ground.n_subsets
    size = F.ground.subset_size
    out = np.zeros(n)
    for eta in range(n):
        sub = eta
        acc = 0.0
        while True:
            sign = -1.0 if (size[eta] - size[sub]) & 1 else 1.0
            acc += sign * F.values[sub]
            if sub == 0:
                break
            sub = (sub - 1) & eta
        out[eta] = acc
    return SetFunction(F.ground, out)


# ---------------------------------------------------------------------------
# convolutions
# ---------------------------------------------------------------------------

def conv_disjoint(G1, G2):
    """Disjoint-pair convolution ``H(eta) = sum_{xi subset eta} G1(xi) G2(eta\\xi)``.

    Enumerates every ordered pair of disjoint subsets once and accumulates
    the product onto their union.
    """
    _check_same_ground(G1, G2)
    n = G1.ground.n_subsets
    masks = np.arange(n)
    out = np.zeros(n)
    for a in range(n):
        ga = G1.values[a]
        if ga == 0.0:
            continue
        free = masks[(masks & a) == 0]
        np.add.at(out, free | a, ga * G2.values[free])
    return SetFunction(G1.ground, out, f"({G1.label})*({G2.label})")


def conv_union(G1, G2):
    """Covering convolution: sum over ordered three-partitions of the target.

    Each three-partition ``(z1, z2, z3)`` of ``eta`` contributes
    ``G1(z1 u z2) G2(z2 u z3)``; equivalently, each ordered pair ``(a, b)``
    with ``a u b = eta`` contributes ``G1(a) G2(b)`` (set ``z2 = a n b``).
    Direct enumeration, independent of the zeta transform.
    """
    _check_same_ground(G1, G2)
    n = G1.ground.n_subsets
    masks = np.arange(n)
    out = np.zeros(n)
    for a in range(n):
        ga = G1.values[a]
        if ga == 0.0:
            continue
        np.add.at(out, masks | a, ga * G2.values)
    return SetFunction(G1.ground, out, f"({G1.label})star({G2.label})")


def exp_vector(ground, f, label=None):
    """Multiplicative vector ``eta -> prod_{x in eta} f(x)``; 1 at the empty set.

    ``f`` is a per-site sequence of reals.
    """
    f = tuple(float(v) for v in f)
    if len(f) != ground.n_sites:
        raise ValidationError("per-site table length != site count")
    vals = np.ones(1)
    for v in f:
        vals = np.concatenate([vals, vals * v])
    return SetFunction(ground, vals, label or "exp_vector")


def minlos_pairing(H, G1, G2, z):
    """Both sides of the pairing identity for the disjoint convolution.

    lhs integrates ``H * (G1 conv G2)`` against the reference measure; rhs
    is the double lattice sum ``sum_{eta n xi = 0} H(eta u xi) G1(eta) G2(xi)``
    with the product reference weights.  The rhs enumeration never calls
    :func:`conv_disjoint`, so the two sides are independent computations.

    Returns ``(lhs, rhs)``.
    """
    _check_same_ground(H, G1)
    _check_same_ground(H, G2)
    lhs = lp_integral(H * conv_disjoint(G1, G2), z)
    w = H.ground.lp_weights(z)
    n = H.ground.n_subsets
    masks = np.arange(n)
    rhs = 0.0
    for eta in range(n):
        g1 = G1.values[eta] * w[eta]
        if g1 == 0.0:
            continue
        free = masks[(masks & eta) == 0]
        rhs += g1 * float(np.dot(G2.values[free] * w[free],
                                 H.values[free | eta]))
    return lhs, float(rhs)


# ---------------------------------------------------------------------------
# norm fitting on the growth-scale family of spaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormFit:
    """Exact sup of ``|k(eta)| / (C^|eta| (|eta|!)^delta)`` with a witness."""

    C: float
    delta: float
    norm: float
    attained_at: Configuration


def norm_fit(k, C, delta):
    """Fit the growth-scale norm of a tabulated functional.

    The essential sup over the finite lattice is an exact maximum; ties are
    broken by the lexicographically least bitmask.
    """
    if C <= 0 or delta < 0:
        raise ValidationError("need C > 0 and delta >= 0")
    size = k.ground.subset_size
    fact = np.array([math.factorial(int(s)) for s in size], dtype=float)
    scale = (C ** size) * fact ** delta
    ratios = np.abs(k.values) / scale
    best = int(np.argmax(ratios))  # argmax returns the first (least) mask
    return NormFit(C=float(C), delta=float(delta), norm=float(ratios[best]),
                   attained_at=Configuration(k.ground, best))


def poly_bound_check(G, region_size=None):
    """Verify the polynomial bound on the transform of a bounded function.

    For ``G`` with support order ``N`` (largest occupied cardinality) and
    ``C = max |G|``, checks ``|KG(gamma)| <= C (1 + |gamma|)^N`` across the
    lattice.  Returns ``(C, N, holds)``.
    """
    size = G.ground.subset_size
    C = float(np.max(np.abs(G.values)))
    support = np.nonzero(G.values)[0]
    N = int(size[support].max()) if support.size else 0
    F = k_transform(G)
    if region_size is None:
        region_size = G.ground.n_sites
    bound = C * (1.0 + np.minimum(size, region_size)) ** N
    holds = bool(np.all(np.abs(F.values) <= bound + 1e-12))
    return C, N, holds
