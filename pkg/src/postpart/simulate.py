"""Desk-scale data generation and posterior sampling.

The generators cover the standard exercise scenarios: a slightly bimodal
Gaussian pair in 1-d, four Gaussian quadrants in 2-d, a Gaussian truncated
to the unit square, and a skewed-t (all selectable from the CLI as
presets).  The sampler is a collapsed Gibbs sampler for a Dirichlet-process
mixture of Gaussians with independent normal-inverse-gamma priors per
dimension, which matches a diagonal location-scale mixture; only the
partition draws are kept.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .samples import SampleSet

__all__ = [
    "MixtureSpec",
    "DpmHyper",
    "gen_mixture",
    "default_hyper",
    "dpm_gibbs",
    "bimodal_spec",
    "quadrant_spec",
    "truncated_spec",
    "skewt_spec",
    "PRESETS",
]


@dataclass(frozen=True)
class MixtureSpec:
    """Mixture data-generating process.

    means/sds have one row per component (dims columns); weights must sum
    to one.  With `truncate_unit_square` points outside [0,1]^dims are
    discarded and redrawn until exactly n remain.  df/skew switch the
    component noise from Gaussian to a (Fernandez-Steel style) skewed t,
    applied independently per dimension.
    """

    n: int
    means: np.ndarray
    sds: np.ndarray
    weights: np.ndarray
    seed: int = 0
    truncate_unit_square: bool = False
    df: float | None = None
    skew: float | None = None

    def __post_init__(self):
        means = np.atleast_2d(np.asarray(self.means, dtype=float))
        sds = np.broadcast_to(
            np.asarray(self.sds, dtype=float).reshape(means.shape[0], -1), means.shape
        ).copy()
        weights = np.asarray(self.weights, dtype=float)
        if self.n < 1:
            raise ValueError("n must be positive")
        if means.ndim != 2 or means.shape[1] not in (1, 2):
            raise ValueError("means must be k x dims with dims in {1, 2}")
        if weights.shape != (means.shape[0],):
            raise ValueError("weights must have one entry per component")
        if (weights <= 0).any() or abs(weights.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be positive and sum to 1")
        if (sds <= 0).any():
            raise ValueError("standard deviations must be positive")
        if self.df is not None and self.df <= 0:
            raise ValueError("df must be positive")
        if self.skew is not None and self.skew <= 0:
            raise ValueError("skew must be positive")
        for name, v in (("means", means), ("sds", sds), ("weights", weights)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def dims(self) -> int:
        return self.means.shape[1]

    @property
    def k(self) -> int:
        return self.means.shape[0]


def bimodal_spec(n: int = 600, seed: int = 0) -> MixtureSpec:
    """Slightly bimodal 1-d pair: equal-weight unit-variance Gaussians at
    -1.1 and +1.1."""
    return MixtureSpec(n=n, means=[[-1.1], [1.1]], sds=[[1.0], [1.0]],
                       weights=[0.5, 0.5], seed=seed)


def quadrant_spec(m: float = 1.25, n: int = 600, seed: int = 0) -> MixtureSpec:
    """Four equal-weight unit-variance Gaussians at (+-m, +-m)."""
    means = [[m, m], [m, -m], [-m, -m], [-m, m]]
    return MixtureSpec(n=n, means=means, sds=np.ones((4, 2)),
                       weights=[0.25] * 4, seed=seed)


def truncated_spec(sd: float = 0.4, n: int = 200, seed: int = 0) -> MixtureSpec:
    """Gaussian at (0.5, 0.5) with sd*I, truncated to the unit square."""
    return MixtureSpec(n=n, means=[[0.5, 0.5]], sds=[[sd, sd]], weights=[1.0],
                       seed=seed, truncate_unit_square=True)


def skewt_spec(df: float = 5.0, skew: float = 2.0, n: int = 200,
               seed: int = 0) -> MixtureSpec:
    """2-d skewed t with independent dimensions."""
    return MixtureSpec(n=n, means=[[0.0, 0.0]], sds=[[1.0, 1.0]], weights=[1.0],
                       seed=seed, df=df, skew=skew)


PRESETS = {
    "bimodal": bimodal_spec,
    "quadrants": quadrant_spec,
    "truncated": truncated_spec,
    "skewt": skewt_spec,
}


def _noise(rng: np.random.Generator, size, df, skew) -> np.ndarray:
    if df is None:
        return rng.standard_normal(size)
    t = rng.standard_t(df, size=size)
    if skew is None or skew == 1.0:
        return t
    # two-piece rescaling: positive side stretched by skew, negative side
    # compressed, with matching piece probabilities
    pos = rng.random(size) < skew**2 / (1.0 + skew**2)
    return np.where(pos, np.abs(t) * skew, -np.abs(t) / skew)


def gen_mixture(spec: MixtureSpec):
    """Draw (data, labels) for the given mixture; deterministic per seed."""
    rng = np.random.default_rng(spec.seed)
    data = np.empty((0, spec.dims))
    labels = np.empty(0, dtype=np.int64)
    need = spec.n
    while need > 0:
        comp = rng.choice(spec.k, size=need, p=spec.weights)
        pts = spec.means[comp] + spec.sds[comp] * _noise(
            rng, (need, spec.dims), spec.df, spec.skew
        )
        if spec.truncate_unit_square:
            ok = ((pts >= 0.0) & (pts <= 1.0)).all(axis=1)
            pts, comp = pts[ok], comp[ok]
        data = np.vstack([data, pts])
        labels = np.concatenate([labels, comp])
        need = spec.n - data.shape[0]
    return data, labels


@dataclass(frozen=True)
class DpmHyper:
    """Hyperparameters of the mixture: per-dimension normal-inverse-gamma
    base measure (mu0, k0, a0, b0) and concentration alpha."""

    mu0: np.ndarray
    k0: float
    a0: float
    b0: np.ndarray
    alpha: float = 1.0

    def __post_init__(self):
        mu0 = np.atleast_1d(np.asarray(self.mu0, dtype=float))
        b0 = np.atleast_1d(np.asarray(self.b0, dtype=float))
        if self.k0 <= 0 or self.a0 <= 0 or self.alpha <= 0:
            raise ValueError("k0, a0 and alpha must be positive")
        if (b0 <= 0).any():
            raise ValueError("b0 must be positive")
        if b0.shape != mu0.shape:
            raise ValueError("mu0 and b0 must have matching dimensions")
        mu0.setflags(write=False)
        b0.setflags(write=False)
        object.__setattr__(self, "mu0", mu0)
        object.__setattr__(self, "b0", b0)


def default_hyper(data: np.ndarray, alpha="1") -> DpmHyper:
    """Data-driven defaults: mu0 at the sample mean, k0 = 0.1 (diffuse
    cluster centers), a0 = 3/2 (marginal Student-t prior with 3 df on the
    centers), b0 = sample variance / 4.

    alpha is 1 by default; "empirical" selects 2/log(n).
    """
    data = np.atleast_2d(np.asarray(data, dtype=float))
    if data.shape[0] < 2:
        raise ValueError("need at least two observations")
    var = data.var(axis=0, ddof=1)
    if (var <= 0).any():
        raise ValueError("data has zero variance in some dimension")
    if alpha == "empirical":
        alpha_val = 2.0 / np.log(data.shape[0])
    elif alpha == "1":
        alpha_val = 1.0
    else:
        alpha_val = float(alpha)
    return DpmHyper(mu0=data.mean(axis=0), k0=0.1, a0=1.5, b0=var / 4.0,
                    alpha=alpha_val)


def dpm_gibbs(data: np.ndarray, hyper: DpmHyper, iters: int, burnin: int = 0,
              thin: int = 1, seed: int = 0) -> SampleSet:
    """Collapsed Gibbs sampler for the partition of a DPM of Gaussians.

    Each sweep reassigns every item using the conjugate predictive weights:
    an existing cluster with probability proportional to its size times the
    cluster's posterior-predictive density, a new cluster proportional to
    alpha times the prior predictive.  Returns (iters - burnin) // thin
    canonical draws; deterministic for a given seed.
    """
    data = np.atleast_2d(np.asarray(data, dtype=float))
    if data.ndim != 2:
        raise ValueError("data must be n x dims")
    if not iters > burnin >= 0:
        raise ValueError("need iters > burnin >= 0")
    if thin < 1:
        raise ValueError("thin must be >= 1")
    n, d = data.shape
    if hyper.mu0.shape != (d,):
        raise ValueError(f"hyperparameters are {hyper.mu0.size}-dimensional, "
                         f"data is {d}-dimensional")
    n_keep = (iters - burnin) // thin
    if n_keep < 1:
        raise ValueError("schedule keeps no draws")
    out = np.empty((n_keep, n), dtype=np.int32)
    kept = _kernels.dpm_gibbs(
        np.ascontiguousarray(data), hyper.mu0, float(hyper.k0), float(hyper.a0),
        hyper.b0, float(hyper.alpha), int(iters), int(burnin), int(thin),
        np.uint64(seed if seed is not None else 0) ^ np.uint64(0xD1B54A32D192ED03),
        out,
    )
    assert kept == n_keep
    return SampleSet(out)
