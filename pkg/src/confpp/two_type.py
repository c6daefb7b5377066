"""Two-type configuration calculus: paired transforms and the double convolution.

Pair set functions live on the product lattice ``(eta_plus, eta_minus)``; the
paired transform applies the zeta sweep independently per coordinate, and the
double covering convolution sums ordered three-partitions in each coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Configuration, SetFunction
from .errors import GroundMismatchError, OverlapError, ValidationError
from .transforms import moebius_values, zeta_values

PAIR_MAX_SITES = 12


@dataclass(frozen=True)
class PairConfiguration:
    """An ordered pair of configurations on one discrete ground."""

    plus: Configuration
    minus: Configuration

    def __post_init__(self):
        if self.plus.ground != self.minus.ground:
            raise GroundMismatchError("pair components on different grounds")

    @property
    def ground(self):
        return self.plus.ground

    @property
    def disjoint(self):
        return not (self.plus.mask & self.minus.mask)

    def union(self):
        """Superposed configuration; overlapping components are rejected."""
        if not self.disjoint:
            raise OverlapError("pair components share a site")
        return Configuration(self.ground, self.plus.mask | self.minus.mask)


@dataclass(frozen=True)
class PairSetFunction:
    """Real table over the product lattice, plus-mask major.

    ``values[i, j]`` is the value at plus-mask ``i``, minus-mask ``j``.
    """

    ground: object
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        if self.ground.n_sites > PAIR_MAX_SITES:
            raise ValidationError(
                f"pair tables limited to {PAIR_MAX_SITES} sites per coordinate")
        vals = np.asarray(self.values, dtype=float)
        n = self.ground.n_subsets
        if vals.shape != (n, n):
            raise ValidationError(f"pair table must be {n}x{n}")
        if not np.all(np.isfinite(vals)):
            raise ValidationError("pair table has non-finite entries")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __call__(self, pair):
        return float(self.values[pair.plus.mask, pair.minus.mask])

    def same_ground(self, other):
        return self.ground == other.ground

    def __mul__(self, other):
        if isinstance(other, PairSetFunction):
            if not self.same_ground(other):
                raise GroundMismatchError("operands on different grounds")
            return PairSetFunction(self.ground, self.values * other.values)
        return PairSetFunction(self.ground, self.values * float(other))

    def to_json(self):
        # row-major: plus-mask outer, minus-mask inner
        return {"ground": {"kind": "discrete",
                           "weights": list(self.ground.weights)},
                "values": [float(v) for v in self.values.reshape(-1)],
                "label": self.label}


def pair_product(G1, G2, label=None):
    """Tensor pair function ``(eta+, eta-) -> G1(eta+) G2(eta-)``."""
    if not G1.same_ground(G2):
        raise GroundMismatchError("factors on different grounds")
    return PairSetFunction(G1.ground, np.outer(G1.values, G2.values),
                           label or f"({G1.label})x({G2.label})")


def pair_indicator_empty(ground):
    vals = np.zeros((ground.n_subsets, ground.n_subsets))
    vals[0, 0] = 1.0
    return PairSetFunction(ground, vals, "delta_(0,0)")


def kk_transform(G):
    """Coordinatewise zeta transform; equals the two single-type sweeps."""
    n = G.ground.n_sites
    vals = np.apply_along_axis(zeta_values, 0, G.values, n)
    vals = np.apply_along_axis(zeta_values, 1, vals, n)
    return PairSetFunction(G.ground, vals, f"KK[{G.label}]")


def kk_inverse(F):
    """Coordinatewise signed Moebius sweep; exact inverse of the transform."""
    n = F.ground.n_sites
    vals = np.apply_along_axis(moebius_values, 0, F.values, n)
    vals = np.apply_along_axis(moebius_values, 1, vals, n)
    return PairSetFunction(F.ground, vals, f"KKinv[{F.label}]")


def _covering_pairs(ground):
    """Per-target lists of ordered pairs ``(a, b)`` with ``a u b = eta``."""
    out = []
    for eta in range(ground.n_subsets):
        firsts, seconds = [], []
        a = eta
        while True:
            rest = eta & ~a
            s = a
            while True:
                firsts.append(a)
                seconds.append(rest | s)
                if s == 0:
                    break
                s = (s - 1) & a
            if a == 0:
                break
            a = (a - 1) & eta
        out.append((np.array(firsts), np.array(seconds)))
    return out


def conv_star2(G1, G2):
    """Double covering convolution: three-partitions in each coordinate.

    ``H(eta+, eta-)`` sums ``G1(a+, a-) G2(b+, b-)`` over ordered pairs with
    ``a+ u b+ = eta+`` and ``a- u b- = eta-``.
    """
    if not G1.same_ground(G2):
        raise GroundMismatchError("operands on different grounds")
    covers = _covering_pairs(G1.ground)
    n = G1.ground.n_subsets
    out = np.empty((n, n))
    for ep in range(n):
        ap, bp = covers[ep]
        for em in range(n):
            am, bm = covers[em]
            out[ep, em] = float(np.sum(
                G1.values[np.ix_(ap, am)] * G2.values[np.ix_(bp, bm)]))
    return PairSetFunction(G1.ground, out,
                           f"({G1.label})star2({G2.label})")


def marginal_correlation(k, side):
    """Slice a pair functional at the empty set of the other type."""
    if side == "plus":
        return SetFunction(k.ground, k.values[:, 0], f"{k.label}|plus")
    if side == "minus":
        return SetFunction(k.ground, k.values[0, :], f"{k.label}|minus")
    raise ValidationError("side must be 'plus' or 'minus'")


def pair_lp_integral(G, z_plus=1.0, z_minus=1.0):
    """Exact pairing against the product reference measure."""
    wp = G.ground.lp_weights(z_plus)
    wm = G.ground.lp_weights(z_minus)
    return float(wp @ G.values @ wm)


def pair_lenard_check(k, trials, seed, tol=1e-10):
    """Two-type positive-definiteness probe.

    Draws nonnegative test observables ``F`` on the product lattice, maps them
    down through the inverse transform and pairs with ``k``; passes when no
    pairing dips below ``-tol``.  Returns ``(passed, worst)``.
    """
    rng = np.random.default_rng(seed)
    n = k.ground.n_subsets
    worst = np.inf
    for _ in range(trials):
        F = PairSetFunction(k.ground, rng.uniform(0.0, 1.0, (n, n)))
        G = kk_inverse(F)
        worst = min(worst, pair_lp_integral(G * k))
    return bool(worst >= -tol), float(worst)
