"""Numerical lower bounds on the Bayes risk of detecting a correlated path."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from correlated_paths.choices import BoundRouteChoices, RegimeChoices
from correlated_paths.exceptions import DomainError
from correlated_paths.graph import intersection_sizes
from correlated_paths.model import CorrelationModel, path_log_likelihood_ratios
from correlated_paths.paths import PathClass, as_support
from correlated_paths.rng import STREAM_BAYES_RISK, STREAM_BOOTSTRAP, substream
from correlated_paths.utils.stats import mean_interval, top_decile_share

logger = logging.getLogger(__name__)

PSI_LIMIT = 1.0 / 9.0
CRITICAL_EXP_MOMENT = 2.0
HEAVY_TAIL_SHARE = 0.5
MIN_MOMENT_TRIALS = 1000
BAYES_RISK_BATCH = 1000
SOLVER_XTOL = 1e-12


def lambda_psi(psi):
    """Exponent 1/4 [sqrt((1-|psi|)/(1-9|psi|)) - (1+|psi|)/(1-|psi|)] of the intersection moment.

    Raises:
        DomainError: If |psi| >= 1/9, where the lower bound does not apply.
    """
    a = abs(psi)
    if a >= PSI_LIMIT:
        raise DomainError(f"The intersection lower bound requires |psi| < 1/9, got psi={psi}")
    return 0.25 * (math.sqrt((1.0 - a) / (1.0 - 9.0 * a)) - (1.0 + a) / (1.0 - a))


def xi(a, eta, c0):
    """Closed-form bound e^a + c0 (e^a - 1) e^a eta^2 / (1 - e^a eta) on E exp(a |S ∩ T|).

    Valid for any prior whose intersection tail satisfies P(|S ∩ T| >= l) <= c0 eta^l.

    Raises:
        DomainError: If e^a eta >= 1, where the geometric series diverges.
    """
    if a < 0:
        raise DomainError(f"Xi needs a >= 0, got a={a}")
    if not 0 < eta < 1 or c0 < 0:
        raise DomainError(f"Xi needs eta in (0, 1) and c0 >= 0, got eta={eta}, c0={c0}")
    growth = math.exp(a)
    if growth * eta >= 1.0:
        raise DomainError(f"Geometric series diverges: e^a * eta = {growth * eta:.6g} >= 1")
    return growth + c0 * math.expm1(a) * growth * eta**2 / (1.0 - growth * eta)


def moment_risk_bound(psi, exp_moment):
    """Lower bound max(0, 1 - sqrt(exp_moment - 1) / 2) on the Bayes risk at ``psi``."""
    lambda_psi(psi)
    if exp_moment < 1.0:
        raise DomainError(f"An exponential intersection moment is at least 1, got {exp_moment}")
    return min(1.0, max(0.0, 1.0 - 0.5 * math.sqrt(exp_moment - 1.0)))


@dataclass(frozen=True)
class MonteCarloEstimate:
    """A Monte Carlo mean with its bootstrap interval."""

    estimate: float
    ci_lo: float
    ci_hi: float
    trials: int
    heavy_tailed: bool = False

    def to_json(self):
        """Return a JSON-serializable dict."""
        return {
            "estimate": self.estimate,
            "ci_lo": self.ci_lo,
            "ci_hi": self.ci_hi,
            "trials": self.trials,
            "heavy_tailed": self.heavy_tailed,
        }


@dataclass(frozen=True)
class LowerBoundReport:
    """One lower-bound evaluation at a given psi, with the route that produced the moment.

    ``exp_moment`` and ``risk_bound`` are None when the bound is vacuous at this psi.
    """

    psi: float
    lambda_val: float
    exp_moment: object
    risk_bound: object
    route: BoundRouteChoices
    regime: RegimeChoices
    blocks: int = 1
    criterion_met: bool = True
    provenance: dict = field(default_factory=dict)

    @property
    def vacuous(self):
        """True when no bound could be computed at this psi."""
        return self.risk_bound is None

    def to_json(self):
        """Return a JSON-serializable dict."""
        return {
            "psi": self.psi,
            "lambda": self.lambda_val,
            "exp_moment": self.exp_moment,
            "risk_bound": self.risk_bound,
            "route": str(self.route),
            "regime": str(self.regime),
            "blocks": self.blocks,
            "criterion_met": self.criterion_met,
            "vacuous": self.vacuous,
            "provenance": self.provenance,
        }


def _eit_provenance(eit):
    return {"eta": eit.eta, "c0": eit.c0, "trials": eit.mc_trials}


def _vacuous_report(psi, a, eit, regime, blocks):
    logger.warning("Bound vacuous at psi=%s: e^lambda * eta = %.6g >= 1", psi, math.exp(a) * eit.eta)
    return LowerBoundReport(
        psi=psi,
        lambda_val=a,
        exp_moment=None,
        risk_bound=None,
        route=BoundRouteChoices.CLOSED_FORM,
        regime=regime,
        blocks=blocks,
        criterion_met=False,
        provenance=_eit_provenance(eit),
    )


def known_start_bound(psi, eit):
    """Lower bound for a prior certified by ``eit``, through the closed form Xi(lambda(psi)).

    A degenerate fit (no sampled pair ever intersects) has exact moment 1 and bound 1.
    """
    a = lambda_psi(psi)
    if eit.degenerate:
        return LowerBoundReport(
            psi=psi,
            lambda_val=a,
            exp_moment=1.0,
            risk_bound=1.0,
            route=BoundRouteChoices.EXACT,
            regime=RegimeChoices.KNOWN_START,
            provenance=_eit_provenance(eit),
        )
    if math.exp(a) * eit.eta >= 1.0:
        return _vacuous_report(psi, a, eit, RegimeChoices.KNOWN_START, 1)
    moment = xi(a, eit.eta, eit.c0)
    return LowerBoundReport(
        psi=psi,
        lambda_val=a,
        exp_moment=moment,
        risk_bound=moment_risk_bound(psi, moment),
        route=BoundRouteChoices.CLOSED_FORM,
        regime=RegimeChoices.KNOWN_START,
        criterion_met=moment <= CRITICAL_EXP_MOMENT,
        provenance=_eit_provenance(eit),
    )


def unknown_start_bound(psi, eit, blocks):
    """Lower bound for the hypercube mixture over ``blocks`` disjoint blocks.

    Draws from different blocks never intersect, so the moment is at most 1 + Xi / |J|;
    ``criterion_met`` records Xi <= 2, under which the bound is at least 1 - sqrt(2 / |J|) / 2.
    """
    if blocks < 1:
        raise DomainError(f"The mixture needs at least one block, got {blocks}")
    a = lambda_psi(psi)
    if eit.degenerate:
        within = 1.0
    elif math.exp(a) * eit.eta >= 1.0:
        return _vacuous_report(psi, a, eit, RegimeChoices.UNKNOWN_START, blocks)
    else:
        within = xi(a, eit.eta, eit.c0)
    moment = 1.0 + within / blocks
    return LowerBoundReport(
        psi=psi,
        lambda_val=a,
        exp_moment=moment,
        risk_bound=moment_risk_bound(psi, moment),
        route=BoundRouteChoices.EXACT if eit.degenerate else BoundRouteChoices.CLOSED_FORM,
        regime=RegimeChoices.UNKNOWN_START,
        blocks=blocks,
        criterion_met=within <= CRITICAL_EXP_MOMENT,
        provenance=dict(_eit_provenance(eit), xi=within),
    )


def empirical_exp_moment(sampler, a, trials, other=None):
    """Monte Carlo estimate of E exp(a |S ∩ T|) over i.i.d. prior pairs, with a bootstrap interval.

    The estimate is flagged ``heavy_tailed`` when the top decile of summands carries more than
    half of their total.
    """
    if trials < MIN_MOMENT_TRIALS:
        raise DomainError(f"The exponential moment needs at least {MIN_MOMENT_TRIALS} trials, got {trials}")
    if other is None:
        s_nodes, t_nodes = sampler.draw_pairs(trials)
    else:
        s_nodes, t_nodes = sampler.draw(trials), other.draw(trials)
    summands = np.exp(a * intersection_sizes(s_nodes, t_nodes))
    generator = substream(sampler.seed, STREAM_BOOTSTRAP)
    mean, lo, hi = mean_interval(summands, generator)
    share = top_decile_share(summands)
    heavy = share > HEAVY_TAIL_SHARE
    if heavy:
        logger.warning(
            "Top decile carries %.0f%% of the exponential moment; the interval may be optimistic", 100 * share
        )
    return MonteCarloEstimate(estimate=mean, ci_lo=lo, ci_hi=hi, trials=trials, heavy_tailed=heavy)


def mixture_moment(within, blocks=None):
    """Moment 1 - 1/J + M/J of a uniform mixture over J blocks whose paths never meet across blocks."""
    if blocks is None or blocks == 1:
        return within
    return 1.0 - 1.0 / blocks + within / blocks


def monte_carlo_bound(psi, sampler, trials, blocks=None):
    """Lower bound at ``psi`` from the directly estimated moment, with the interval it implies.

    With ``blocks`` the sampler draws within one block of a hypercube mixture and the moment is
    corrected by :func:`mixture_moment`. Moments below 1 are raised to 1, their exact minimum.
    """
    a = lambda_psi(psi)
    moment = empirical_exp_moment(sampler, a, trials)
    moments = (moment.estimate, moment.ci_lo, moment.ci_hi)
    estimate, low, high = (max(mixture_moment(value, blocks), 1.0) for value in moments)
    return LowerBoundReport(
        psi=psi,
        lambda_val=a,
        exp_moment=estimate,
        risk_bound=moment_risk_bound(psi, estimate),
        route=BoundRouteChoices.MONTE_CARLO,
        regime=RegimeChoices.UNKNOWN_START if blocks else RegimeChoices.GENERIC,
        blocks=blocks or sampler.blocks,
        criterion_met=estimate <= CRITICAL_EXP_MOMENT,
        provenance={
            "trials": trials,
            "ci": [low, high],
            "risk_ci": [moment_risk_bound(psi, high), moment_risk_bound(psi, low)],
            "heavy_tailed": moment.heavy_tailed,
        },
    )


def bayes_risk_estimate(prior, psi, trials, seed=0, lattice=None, budget=None):
    """Monte Carlo estimate of the Bayes risk 1 - E_0 |L_nu(X) - 1| / 2.

    Since E_0 L_nu = 1 the risk equals E_0 min(1, L_nu), whose summands stay in [0, 1]; the
    absolute-deviation form has infinite variance under the null once |psi| is large.

    Args:
        prior (PathClass | PathSupport): Uniform prior over an enumerable class, or a weighted support.
        psi (float): Correlation, |psi| < 1.
        trials (int): Number of null draws.
        seed (int): Master seed.
        lattice (TorusLattice): Needed when ``prior`` is not a PathClass.
        budget (int): Enumeration budget.

    Raises:
        BudgetExceededError: If the class cannot be enumerated within ``budget``.
    """
    model = CorrelationModel(psi)
    if lattice is None:
        if not isinstance(prior, PathClass):
            raise DomainError("A lattice is required when the prior is an explicit support")
        lattice = prior.lattice
    support = as_support(prior, budget=budget)
    paths = support.as_array()
    log_weights = np.log(support.weight_array())
    risks = np.empty(trials, dtype=np.float64)
    for begin in range(0, trials, BAYES_RISK_BATCH):
        end = min(trials, begin + BAYES_RISK_BATCH)
        values = np.stack(
            [substream(seed, STREAM_BAYES_RISK, trial).standard_normal(lattice.n) for trial in range(begin, end)]
        )
        log_ratio = special.logsumexp(path_log_likelihood_ratios(values, paths, model.psi) + log_weights, axis=-1)
        risks[begin:end] = np.minimum(1.0, np.exp(log_ratio))
    mean, lo, hi = mean_interval(risks, substream(seed, STREAM_BOOTSTRAP, 1))
    logger.info("Bayes risk at psi=%s over %s null draws: %.4g [%.4g, %.4g]", psi, trials, mean, lo, hi)
    return MonteCarloEstimate(estimate=mean, ci_lo=lo, ci_hi=hi, trials=trials)


def vacuity_psi(eta):
    """The psi in (0, 1/9) at which e^lambda(psi) eta reaches 1; the closed form is finite below it."""
    if eta is None or eta <= 0:
        return PSI_LIMIT
    if eta >= 1:
        return 0.0
    target = -math.log(eta)
    upper = math.nextafter(PSI_LIMIT, 0.0)
    if lambda_psi(upper) <= target:
        return PSI_LIMIT
    return optimize.bisect(lambda psi: lambda_psi(psi) - target, 0.0, upper, xtol=SOLVER_XTOL)


def critical_psi(eit):
    """Largest psi for which Xi(lambda(psi)) <= 2, so that the closed-form bound is at least 1/2.

    The vacuity point is located first; if Xi stays below 2 up to it, the vacuity point is
    returned.
    """
    if eit.degenerate:
        return PSI_LIMIT
    ceiling = vacuity_psi(eit.eta)
    upper = ceiling * (1.0 - 1e-12)

    def excess(psi):
        a = lambda_psi(psi)
        if math.exp(a) * eit.eta >= 1.0:
            return math.inf
        return xi(a, eit.eta, eit.c0) - CRITICAL_EXP_MOMENT

    if upper <= 0.0 or excess(upper) <= 0:
        return ceiling
    if excess(0.0) >= 0:
        return 0.0
    psi = optimize.bisect(excess, 0.0, upper, xtol=SOLVER_XTOL)
    logger.info("Critical psi for eta=%.4g, c0=%.4g: %.6g (vacuity at %.6g)", eit.eta, eit.c0, psi, ceiling)
    return psi


def bound_sweep(psi_grid, eit, blocks=None):
    """Return one LowerBoundReport per grid value, known-start when ``blocks`` is None."""
    if blocks is None:
        return [known_start_bound(psi, eit) for psi in sorted(psi_grid)]
    return [unknown_start_bound(psi, eit, blocks) for psi in sorted(psi_grid)]


@dataclass(frozen=True)
class CriticalBracket:
    """Measured psi bracket: where the lower bound still certifies risk >= 1/2, and where the test wins.

    Attributes:
        bound_psi (float | None): Largest psi with a valid lower bound of at least 1/2.
        risk_psi (float | None): Smallest psi with measured total risk below the success level.
    """

    bound_psi: object
    risk_psi: object
    success_level: float = 0.1

    @property
    def is_nonempty(self):
        """True when both ends were found."""
        return self.bound_psi is not None and self.risk_psi is not None

    @property
    def is_ordered(self):
        """True when the bound end lies at or below the test end."""
        return self.is_nonempty and self.bound_psi <= self.risk_psi

    def to_json(self):
        """Return a JSON-serializable dict."""
        return {
            "bound_psi": self.bound_psi,
            "risk_psi": self.risk_psi,
            "success_level": self.success_level,
            "nonempty": self.is_nonempty,
            "ordered": self.is_ordered,
        }
