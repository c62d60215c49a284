"""Posterior sampling for the signed logistic model with L1/L2 priors.

Data augmentation: each observation carries a latent truncated-normal
utility z_i ~ N+(y_i x_i' beta, omega_i) and a latent scale omega_i whose
marginal is the exponential-series mixture that makes the integrated link
logistic: omega = sum_k 2 eps_k / k^2 with eps_k ~ Exp(1). (The partial sums
converge to the logistic variance pi^2/3; series with other denominators
produce a different, non-logistic link.) L1 coordinates get the scale-mixture
Laplace prior with a shared rate lambda ~ Gamma(a, b); L2 coordinates keep a
fixed normal prior.

One scan updates omega (Metropolis with the series proposal, z marginalized
out), then z, then the L1 local scales tau^-2 (inverse-Gaussian), then beta
jointly (Gaussian), then lambda (Gamma, collapsed over tau). The lambda
update counts and sums only L1 coordinates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.linalg import cho_factor, cho_solve, solve_triangular
from scipy.special import expit, log_ndtr

from icepartial.design import ColumnDirectory, SparseDesign, directory_from_dict, directory_to_dict
from icepartial.errors import InvalidConfig, SolverFailure
from icepartial.penalties import Penalty, Ridge, validate_penalties

_TINY_BETA = 1e-10  # guards |lambda / beta_j| when a draw lands numerically at 0


@dataclass(frozen=True)
class GibbsConfig:
    n_samples: int = 10_000
    burnin: int = 1_000
    thin: int = 1
    series_terms: int = 100  # K, length of the omega proposal series
    lambda_shape: float = 2.0  # a
    lambda_rate: float = 0.1  # b
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1 or self.burnin < 0 or self.thin < 1:
            raise InvalidConfig("need n_samples >= 1, burnin >= 0, thin >= 1")
        if self.series_terms < 1:
            raise InvalidConfig("series_terms must be >= 1")
        if not (self.lambda_shape > 0) or not (self.lambda_rate > 0):
            raise InvalidConfig("lambda prior needs shape > 0 and rate > 0")


def series_weights(n_terms: int, kind: str = "logistic") -> np.ndarray:
    """Coefficients of the omega proposal series omega = sum_k w_k eps_k.

    kind "logistic" gives w_k = 2 / k^2 (weights sum toward pi^2/3), the
    series whose Gaussian mixture integrates to the logistic link and the
    one the sampler uses. kind "unit_mean" gives w_k = 2 / ((k - 1/2)^2 pi^2)
    (weights sum toward 1); its mixture is a different, non-logistic link,
    kept available because its unit proposal mean is a handy diagnostic.
    """
    if n_terms < 1:
        raise InvalidConfig("series needs at least one term")
    k = np.arange(1, n_terms + 1, dtype=np.float64)
    if kind == "logistic":
        return 2.0 / (k * k)
    if kind == "unit_mean":
        return 2.0 / ((k - 0.5) ** 2 * math.pi**2)
    raise InvalidConfig(f"unknown series kind {kind!r}")


def draw_omega(
    m: np.ndarray, omega: np.ndarray, rng: np.random.Generator, n_terms: int = 100
) -> tuple[np.ndarray, int]:
    """One Metropolis update of the latent scales, z marginalized out.

    Proposes omega' = sum_k 2 eps_k / k^2 and accepts with probability
    min{1, Phi(m / sqrt(omega')) / Phi(m / sqrt(omega))}. With m = 0 every
    proposal is accepted. Returns the new scales and the acceptance count.
    """
    m = np.asarray(m, dtype=np.float64)
    n = m.shape[0]
    if n == 0:
        return omega.copy(), 0
    proposal = rng.standard_exponential((n, n_terms)) @ series_weights(n_terms)
    log_ratio = log_ndtr(m / np.sqrt(proposal)) - log_ndtr(m / np.sqrt(omega))
    accept = np.log(rng.random(n)) < log_ratio
    out = np.where(accept, proposal, omega)
    return out, int(accept.sum())


def draw_truncated_normal_plus(
    mean: np.ndarray, sd: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Exact draws from N(mean, sd^2) restricted to (0, inf), vectorized.

    Standard two-regime sampler: plain rejection when the truncation point
    sits left of the mode, translated-exponential rejection in the tail.
    """
    mean = np.asarray(mean, dtype=np.float64)
    sd = np.asarray(sd, dtype=np.float64)
    if np.any(sd <= 0):
        raise InvalidConfig("truncated-normal sd must be positive")
    a = -mean / sd  # standardized lower bound
    out = np.empty(np.broadcast(mean, sd).shape)
    a = np.broadcast_to(a, out.shape).copy()

    easy = a <= 0.25  # cheap rejection keeps acceptance >= ~40%
    pending = np.flatnonzero(easy)
    vals = np.empty(len(pending))
    todo = np.arange(len(pending))
    bounds = a[pending]
    for _ in range(10_000):
        if len(todo) == 0:
            break
        draw = rng.standard_normal(len(todo))
        ok = draw > bounds[todo]
        vals[todo[ok]] = draw[ok]
        todo = todo[~ok]
    else:
        raise SolverFailure("truncated-normal rejection failed to terminate")
    out[pending] = vals

    hard = np.flatnonzero(~easy)
    if len(hard):
        vals = np.empty(len(hard))
        todo = np.arange(len(hard))
        bounds = a[hard]
        rate = (bounds + np.sqrt(bounds * bounds + 4.0)) / 2.0
        for _ in range(10_000):
            if len(todo) == 0:
                break
            b, lam = bounds[todo], rate[todo]
            w = b - np.log(rng.random(len(todo))) / lam
            ok = np.log(rng.random(len(todo))) < -0.5 * (w - lam) ** 2
            vals[todo[ok]] = w[ok]
            todo = todo[~ok]
        else:
            raise SolverFailure("truncated-normal tail rejection failed to terminate")
        out[hard] = vals
    return mean + sd * out


def draw_inverse_gaussian(
    mu: np.ndarray, shape: float | np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Inverse-Gaussian draws, (mean, shape) parameterization.

    Transformation-with-rejection construction; the root is evaluated via
    v - sqrt(v^2 - 1) = 1 / (v + sqrt(v^2 - 1)) to stay stable for large
    mean-to-shape ratios.
    """
    mu = np.asarray(mu, dtype=np.float64)
    if np.any(mu <= 0) or np.any(np.asarray(shape) <= 0):
        raise InvalidConfig("inverse-Gaussian needs positive mean and shape")
    y = rng.standard_normal(mu.shape) ** 2
    v = 1.0 + mu * y / (2.0 * shape)
    root = v + np.sqrt(v * v - 1.0)
    x_small = mu / root
    u = rng.random(mu.shape)
    return np.where(u <= mu / (mu + x_small), x_small, mu * root)


def draw_beta_conditional(
    folded: sparse.csr_array,
    z: np.ndarray,
    omega: np.ndarray,
    prior_precision: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Joint Gaussian update of all coefficients.

    Posterior precision P + U' diag(1/omega) U with U the sign-folded design;
    posterior mean solves it against U' (z / omega). Draws via the Cholesky
    factor of the precision.
    """
    p = folded.shape[1]
    precision = np.diag(prior_precision.astype(np.float64))
    if folded.shape[0]:
        weighted = folded.multiply((1.0 / omega)[:, None])
        precision += (folded.T @ weighted).toarray()
        rhs = folded.T @ (z / omega)
    else:
        rhs = np.zeros(p)
    try:
        chol = cho_factor(precision, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SolverFailure(f"coefficient update precision not SPD: {exc}") from exc
    mean = cho_solve(chol, rhs)
    noise = solve_triangular(chol[0].T, rng.standard_normal(p), lower=False)
    return mean + noise


def draw_lambda(
    beta_l1: np.ndarray, a: float, b: float, rng: np.random.Generator
) -> float:
    """Shared L1 rate: Gamma(a + p1, b + sum_j |beta_j|) over L1 coordinates."""
    p1 = beta_l1.shape[0]
    return float(rng.gamma(a + p1, 1.0 / (b + np.abs(beta_l1).sum())))


@dataclass
class PosteriorDraws:
    beta: np.ndarray  # (n_draws, n_cols)
    lam: np.ndarray  # (n_draws,)
    config: GibbsConfig
    accept_rate: float
    directory: ColumnDirectory | None
    l1_mask: np.ndarray  # bool per column

    @property
    def n_draws(self) -> int:
        return self.beta.shape[0]


def sample_posterior(
    design: SparseDesign,
    penalties: Sequence[Penalty],
    config: GibbsConfig,
    rng: np.random.Generator | None = None,
) -> PosteriorDraws:
    """Run the full Gibbs sampler.

    Ridge-tagged columns keep fixed prior precision 1/sigma^2 throughout;
    every other column is treated as L1 with the shared sampled rate. The
    returned draws are post-burnin and thinned.
    """
    validate_penalties(penalties, design.n_cols)
    if rng is None:
        rng = np.random.default_rng(config.seed)
    p = design.n_cols
    n = design.n_rows
    folded = design.folded_csr()

    is_l1 = np.array([not isinstance(pen, Ridge) for pen in penalties])
    ridge_prec = np.array(
        [1.0 / (pen.sigma * pen.sigma) if isinstance(pen, Ridge) else 0.0 for pen in penalties]
    )
    p1 = int(is_l1.sum())
    if p1 == 0:
        raise InvalidConfig("sampler needs at least one L1 column")

    beta = np.zeros(p)
    omega = np.ones(n)
    inv_tau2 = np.ones(p1)
    lam = config.lambda_shape / config.lambda_rate  # prior mean

    n_keep = config.n_samples
    beta_out = np.empty((n_keep, p))
    lam_out = np.empty(n_keep)
    accepted = 0
    total_scans = config.burnin + n_keep * config.thin
    kept = 0
    for scan in range(total_scans):
        m = folded @ beta
        omega, acc = draw_omega(m, omega, rng, config.series_terms)
        accepted += acc
        z = draw_truncated_normal_plus(m, np.sqrt(omega), rng)
        mu = lam / np.maximum(np.abs(beta[is_l1]), _TINY_BETA)
        inv_tau2 = draw_inverse_gaussian(mu, lam * lam, rng)
        prior_prec = ridge_prec.copy()
        prior_prec[is_l1] = inv_tau2
        beta = draw_beta_conditional(folded, z, omega, prior_prec, rng)
        lam = draw_lambda(
            beta[is_l1], config.lambda_shape, config.lambda_rate, rng
        )
        idx = scan - config.burnin
        if idx >= 0 and idx % config.thin == 0:
            beta_out[kept] = beta
            lam_out[kept] = lam
            kept += 1
    assert kept == n_keep

    return PosteriorDraws(
        beta=beta_out,
        lam=lam_out,
        config=config,
        accept_rate=accepted / (total_scans * n) if n else 1.0,
        directory=design.directory,
        l1_mask=is_l1,
    )


def better_than_matrix(
    draws: PosteriorDraws, player_ids: Sequence[str]
) -> tuple[np.ndarray, list[str]]:
    """Pairwise posterior comparison probabilities.

    Entry (i, j) is the fraction of draws where player i's coefficient
    strictly exceeds player j's, with ties counted half to each side. The
    lower triangle is filled as the exact complement, so
    entry(i, j) + entry(j, i) == 1 and the diagonal is 0.5 by construction.
    """
    if draws.directory is None:
        raise InvalidConfig("draws carry no column directory")
    ids = list(player_ids)
    if len(set(ids)) != len(ids):
        raise InvalidConfig("duplicate player ids in comparison set")
    cols = [draws.directory.player_index(pid) for pid in ids]
    sel = draws.beta[:, cols]
    t = sel.shape[0]
    k = len(ids)
    out = np.full((k, k), 0.5)
    for i in range(k):
        for j in range(i + 1, k):
            gt = int((sel[:, i] > sel[:, j]).sum())
            eq = int((sel[:, i] == sel[:, j]).sum())
            pij = (gt + 0.5 * eq) / t
            out[i, j] = pij
            out[j, i] = 1.0 - pij
    return out, ids


def save_draws(draws: PosteriorDraws, out_dir: str | Path) -> None:
    """Write a draws artifact: beta.npy, lambda.npy, meta.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    np.save(out / "beta.npy", draws.beta)
    np.save(out / "lambda.npy", draws.lam)
    meta = {
        "config": {
            "n_samples": draws.config.n_samples,
            "burnin": draws.config.burnin,
            "thin": draws.config.thin,
            "series_terms": draws.config.series_terms,
            "lambda_shape": draws.config.lambda_shape,
            "lambda_rate": draws.config.lambda_rate,
            "seed": draws.config.seed,
        },
        "accept_rate": draws.accept_rate,
        "l1_mask": [int(v) for v in draws.l1_mask],
        "directory": None if draws.directory is None else directory_to_dict(draws.directory),
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=1) + "\n")


def load_draws(in_dir: str | Path, *, mmap: bool = True) -> PosteriorDraws:
    """Read a draws artifact; beta is memory-mapped by default so servers can
    slice large chains without loading them."""
    src = Path(in_dir)
    meta = json.loads((src / "meta.json").read_text())
    beta = np.load(src / "beta.npy", mmap_mode="r" if mmap else None)
    lam = np.load(src / "lambda.npy", mmap_mode="r" if mmap else None)
    directory = (
        None if meta["directory"] is None else directory_from_dict(meta["directory"])
    )
    return PosteriorDraws(
        beta=beta,
        lam=lam,
        config=GibbsConfig(**meta["config"]),
        accept_rate=float(meta["accept_rate"]),
        directory=directory,
        l1_mask=np.asarray(meta["l1_mask"], dtype=bool),
    )
