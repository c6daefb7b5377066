"""Continuum Monte Carlo layer: samplers and statistical identity verifiers.

Poisson and mixed-Poisson windows are sampled directly; Gibbs laws by a
spatial birth--death Metropolis--Hastings chain.  The Mecke and GNZ integral
identities are verified by paired estimators with a fixed |z| <= 4 decision
rule; MCMC standard errors use batch means.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import BoxWindow, Configuration, split_streams
from .errors import OverlapError, StabilityError, ValidationError
from .processes import (Gibbs, MixedPoisson, PapangelouSpec, Poisson,
                        Superposition, mixing_convolution, point_mass_mixing)

Z_THRESHOLD = 4.0
GNZ_BATCHES = 32


@dataclass(frozen=True)
class RunPlan:
    """Replication plan: window, replica count, MCMC schedule, seed."""

    window: BoxWindow
    replicas: int
    master_seed: int
    burn_in: int = 10_000
    thinning: int = 10
    proposal_points: int = 64

    def __post_init__(self):
        if not isinstance(self.window, BoxWindow):
            raise ValidationError("plan window must be a continuum box")
        if self.replicas < 1 or self.burn_in < 0 or self.thinning < 0:
            raise ValidationError(
                "need replicas >= 1 and nonnegative burn_in/thinning")
        if self.proposal_points < 1:
            raise ValidationError("need at least one proposal point")

    def to_json(self):
        return {"window": [list(b) for b in self.window.box],
                "replicas": self.replicas, "master_seed": self.master_seed,
                "burn_in": self.burn_in, "thinning": self.thinning,
                "proposal_points": self.proposal_points}


@dataclass(frozen=True)
class IdentityReport:
    """Two-sided estimate of an integral identity with a z-score verdict."""

    identity: str
    lhs_mean: float
    rhs_mean: float
    lhs_se: float
    rhs_se: float
    z_score: float
    passed: bool
    n_effective: int

    def to_json(self):
        return {"identity": self.identity, "lhs": self.lhs_mean,
                "rhs": self.rhs_mean, "lhs_se": self.lhs_se,
                "rhs_se": self.rhs_se, "z_score": self.z_score,
                "pass": self.passed, "n_effective": self.n_effective}


# ---------------------------------------------------------------------------
# direct samplers
# ---------------------------------------------------------------------------

def _points_to_configuration(window, pts):
    return Configuration(window, points=tuple(sorted(map(tuple, pts))))


def sample_poisson(window, z, rng):
    """One Poisson(z) configuration: Poisson count, i.i.d. uniform points."""
    if z <= 0:
        raise ValidationError("intensity must be positive")
    n = int(rng.poisson(z * window.volume))
    while True:
        pts = [tuple(p) for p in window.sample_uniform(rng, n)]
        if len(set(pts)) == n:
            return Configuration(window, points=tuple(sorted(pts)))


def sample_mixed_poisson(window, mixing, rng):
    """Draw an intensity from the mixing masses, then a Poisson sample."""
    j = int(rng.choice(mixing.grid.size, p=mixing.masses))
    return sample_poisson(window, float(mixing.grid[j]), rng)


def superpose(gamma1, gamma2):
    """Sorted merge of two configurations on one window.

    A coincident coordinate pair is rejected: unions are formed pointwise
    and a collision would silently drop a point.
    """
    if gamma1.ground != gamma2.ground:
        raise ValidationError("configurations on different windows")
    merged = gamma1.points + gamma2.points
    if len(set(merged)) != len(merged):
        raise OverlapError("superposed configurations share a point")
    return Configuration(gamma1.ground, points=tuple(sorted(merged)))


# ---------------------------------------------------------------------------
# Gibbs birth--death chain
# ---------------------------------------------------------------------------

def strauss_spec(beta, g, R):
    """Strauss conditional intensity ``r(gamma, x) = beta * g^{s_R(x, gamma)}``.

    ``s_R`` counts the points of gamma within distance R of x.  For
    ``g <= 1`` the intensity is bounded by beta, which the descriptor
    records as ``r_max``.  ``g = 0`` is the hard-core model (``0^0 = 1``).
    """
    if beta <= 0 or not 0 <= g <= 1 or R <= 0:
        raise ValidationError("need beta > 0, 0 <= g <= 1, R > 0")

    r2 = R * R

    def evaluator(gamma, x):
        x = np.asarray(x, dtype=float)
        s = 0
        for p in gamma.points:
            d = np.asarray(p) - x
            if float(d @ d) <= r2:
                s += 1
        if s == 0:
            return beta
        return beta * g ** s

    return PapangelouSpec(evaluator, {"model": "strauss", "beta": beta,
                                      "g": g, "R": R, "r_max": beta})


def _bd_step(points, spec, window, vol, rng, r_max):
    """One birth--death proposal on a list of point tuples, in place."""
    gamma = Configuration(window, points=tuple(sorted(points)))
    if rng.random() < 0.5:  # birth
        x = tuple(float(c) for c in window.sample_uniform(rng, 1)[0])
        if x in points:
            return
        r = spec(gamma, x)
        if r_max is not None and r > r_max * (1 + 1e-12):
            raise StabilityError(
                f"conditional intensity {r} exceeds the stated bound {r_max}")
        if rng.random() < min(1.0, r * vol / (len(points) + 1)):
            points.add(x)
    else:  # death
        if not points:
            return
        pts = sorted(points)
        x = pts[int(rng.integers(len(pts)))]
        rest = Configuration(window, points=tuple(p for p in pts if p != x))
        r = spec(rest, x)
        if r_max is not None and r > r_max * (1 + 1e-12):
            raise StabilityError(
                f"conditional intensity {r} exceeds the stated bound {r_max}")
        if r <= 0.0 or rng.random() < min(1.0, len(pts) / (r * vol)):
            points.discard(x)


def sample_gibbs_bd(spec, plan, rng=None):
    """Thinned stationary stream of the Gibbs law defined by ``spec``.

    Spatial birth--death Metropolis--Hastings: with probability 1/2 propose a
    uniform birth (acceptance ``min(1, r vol / (n+1))``), else a uniform
    death (acceptance ``min(1, n / (r vol))``).  Returns ``plan.replicas``
    states taken every ``plan.thinning`` moves after ``plan.burn_in`` moves.
    """
    if rng is None:
        rng = split_streams(plan.master_seed, 1)[0]
    window = plan.window
    vol = window.volume
    r_max = spec.descriptor.get("r_max")
    points = set()
    for _ in range(plan.burn_in):
        _bd_step(points, spec, window, vol, rng, r_max)
    out = []
    for _ in range(plan.replicas):
        for _ in range(max(plan.thinning, 1)):
            _bd_step(points, spec, window, vol, rng, r_max)
        out.append(_points_to_configuration(window, points))
    return out


def detailed_balance_residual(spec, plan, n_moves=200):
    """Machine-precision self-test of the birth--death acceptance ratios.

    For states along a short chain, the product of the unclipped birth ratio
    at ``(gamma, x)`` and the unclipped death ratio at ``(gamma u x, x)``
    must equal one identically.  Returns the maximum |product - 1|.
    """
    rng = split_streams(plan.master_seed, 1)[0]
    window, vol = plan.window, plan.window.volume
    points = set()
    worst = 0.0
    for _ in range(n_moves):
        gamma = Configuration(window, points=tuple(sorted(points)))
        x = tuple(float(c) for c in window.sample_uniform(rng, 1)[0])
        r = spec(gamma, x)
        if r > 0:
            birth_ratio = r * vol / (len(points) + 1)
            death_ratio = (len(points) + 1) / (r * vol)
            worst = max(worst, abs(birth_ratio * death_ratio - 1.0))
        _bd_step(points, spec, window, vol, rng,
                 spec.descriptor.get("r_max"))
    return worst


# ---------------------------------------------------------------------------
# identity verifiers
# ---------------------------------------------------------------------------

def _paired_report(identity, lhs, rhs, n_effective=None):
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    n = lhs.size
    diff = lhs - rhs
    se_d = float(diff.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    z = float(diff.mean() / se_d) if se_d > 0 else 0.0
    return IdentityReport(
        identity=identity,
        lhs_mean=float(lhs.mean()), rhs_mean=float(rhs.mean()),
        lhs_se=float(lhs.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0,
        rhs_se=float(rhs.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0,
        z_score=z, passed=bool(abs(z) <= Z_THRESHOLD),
        n_effective=n_effective if n_effective is not None else n)


def verify_mecke(z, window, h, plan):
    """Verifier of the defining integral identity of the Poisson process.

    lhs averages ``sum_{x in gamma} h(gamma, x)`` over independent Poisson
    samples; rhs averages ``z vol mean_S h(gamma u x, x)`` over uniform
    insertion points of the same samples, so the two sides are paired.
    """
    rng = split_streams(plan.master_seed, 1)[0]
    S = plan.proposal_points
    vol = window.volume
    lhs = np.empty(plan.replicas)
    rhs = np.empty(plan.replicas)
    for i in range(plan.replicas):
        gamma = sample_poisson(window, z, rng)
        lhs[i] = math.fsum(h(gamma, x) for x in gamma.points)
        acc = 0.0
        for u in window.sample_uniform(rng, S):
            u = tuple(float(c) for c in u)
            if u in gamma.points:
                continue
            acc += h(gamma.with_point(u), u)
        rhs[i] = z * vol * acc / S
    return _paired_report("mecke", lhs, rhs)


def _batch_se(diff, n_batches=GNZ_BATCHES):
    """Batch-means standard error and effective sample size for a chain."""
    n = diff.size
    b = n // n_batches
    if b < 1:
        raise ValidationError("chain too short for batch means")
    means = diff[:b * n_batches].reshape(n_batches, b).mean(axis=1)
    se = float(means.std(ddof=1) / math.sqrt(n_batches))
    var = float(diff.var(ddof=1))
    n_eff = int(var / se ** 2) if se > 0 else n
    return se, min(n_eff, n)


def verify_gnz(spec, h, plan):
    """Verifier of the conditional-intensity integral identity.

    lhs averages ``sum_{x in gamma} h(gamma, x)`` along the stationary MCMC
    stream; rhs averages the uniform-MC estimate of
    ``vol mean_S h(gamma u x, x) r(gamma, x)``.  Standard errors use batch
    means to absorb chain autocorrelation.
    """
    streams = split_streams(plan.master_seed, 2)
    chain = sample_gibbs_bd(spec, plan, streams[0])
    rng = streams[1]
    S = plan.proposal_points
    vol = plan.window.volume
    lhs = np.empty(len(chain))
    rhs = np.empty(len(chain))
    for i, gamma in enumerate(chain):
        lhs[i] = math.fsum(h(gamma, x) for x in gamma.points)
        acc = 0.0
        for u in plan.window.sample_uniform(rng, S):
            u = tuple(float(c) for c in u)
            if u in gamma.points:
                continue
            acc += h(gamma.with_point(u), u) * spec(gamma, u)
        rhs[i] = vol * acc / S
    diff = lhs - rhs
    se, n_eff = _batch_se(diff)
    z = float(diff.mean() / se) if se > 0 else 0.0
    n = len(chain)
    return IdentityReport(
        identity="gnz",
        lhs_mean=float(lhs.mean()), rhs_mean=float(rhs.mean()),
        lhs_se=float(lhs.std(ddof=1) / math.sqrt(n)),
        rhs_se=float(rhs.std(ddof=1) / math.sqrt(n)),
        z_score=z, passed=bool(abs(z) <= Z_THRESHOLD), n_effective=n_eff)


# ---------------------------------------------------------------------------
# empirical correlation and count statistics
# ---------------------------------------------------------------------------

def _boxes_disjoint(b1, b2):
    return any(hi1 <= lo2 or hi2 <= lo1
               for (lo1, hi1), (lo2, hi2) in zip(b1.box, b2.box))


def estimate_correlation(samples, cells, order):
    """Empirical order-n correlation averaged over disjoint cells.

    Estimates the cell-product moment by ``prod_i count_in(gamma, B_i)``
    per sample and divides by the product of cell volumes.  Returns
    ``(estimate, standard_error)``.
    """
    if order != len(cells):
        raise ValidationError("order must equal the number of cells")
    for i, c1 in enumerate(cells):
        for c2 in cells[i + 1:]:
            if not _boxes_disjoint(c1, c2):
                raise ValidationError("cells must be pairwise disjoint")
    vols = np.prod([c.volume for c in cells])
    vals = np.empty(len(samples))
    for i, gamma in enumerate(samples):
        prod = 1.0
        for c in cells:
            prod *= sum(1 for p in gamma.points if c.contains(p))
        vals[i] = prod / vols
    se = float(vals.std(ddof=1) / math.sqrt(len(samples))) if len(samples) > 1 else 0.0
    return float(vals.mean()), se


def density_estimator(gamma):
    """Finite-window empirical intensity ``|gamma| / vol``."""
    return len(gamma) / gamma.ground.volume


def _model_mixing(model):
    if isinstance(model, Poisson):
        return point_mass_mixing(model.z)
    if isinstance(model, MixedPoisson):
        return model.mixing
    if isinstance(model, Superposition):
        return mixing_convolution(_model_mixing(model.left),
                                  _model_mixing(model.right))
    raise ValidationError(
        "count checks support Poisson, MixedPoisson and their superpositions")


def _sample_model(model, window, rng):
    if isinstance(model, Poisson):
        return sample_poisson(window, model.z, rng)
    if isinstance(model, MixedPoisson):
        return sample_mixed_poisson(window, model.mixing, rng)
    if isinstance(model, Superposition):
        return superpose(_sample_model(model.left, window, rng),
                         _sample_model(model.right, window, rng))
    raise ValidationError(f"cannot sample {type(model).__name__}")


def analytic_count_pmf(mixing, volume, n_max):
    """Quadrature values of ``P(N = n)`` for a mixed Poisson count."""
    out = np.empty(n_max + 1)
    zv = mixing.grid * volume
    for n in range(n_max + 1):
        out[n] = float(np.dot(mixing.masses,
                              np.exp(-zv) * zv ** n / math.factorial(n)))
    return out


def count_distribution_check(model, window, n_max, plan):
    """Empirical vs analytic count law of a (mixed/superposed) Poisson model.

    Returns a dict with per-n z-scores, the truncated total-variation
    distance and an overall pass flag (every |z| within threshold).
    """
    rng = split_streams(plan.master_seed, 1)[0]
    counts = np.zeros(n_max + 2)
    overlaps = 0
    for _ in range(plan.replicas):
        while True:
            try:
                gamma = _sample_model(model, window, rng)
                break
            except OverlapError:
                overlaps += 1
        counts[min(len(gamma), n_max + 1)] += 1
    emp = counts / plan.replicas
    analytic = analytic_count_pmf(_model_mixing(model), window.volume, n_max)
    records = []
    all_pass = True
    for n in range(n_max + 1):
        p = analytic[n]
        se = math.sqrt(max(p * (1 - p), 1e-300) / plan.replicas)
        z = (emp[n] - p) / se
        ok = abs(z) <= Z_THRESHOLD
        all_pass = all_pass and ok
        records.append({"n": n, "empirical": float(emp[n]),
                        "analytic": float(p), "z_score": float(z),
                        "pass": bool(ok)})
    tail_analytic = max(0.0, 1.0 - float(analytic.sum()))
    tv = 0.5 * (float(np.abs(emp[:n_max + 1] - analytic).sum())
                + abs(float(emp[n_max + 1]) - tail_analytic))
    return {"per_n": records, "tv": tv, "pass": bool(all_pass),
            "overlap_events": overlaps, "replicas": plan.replicas}
