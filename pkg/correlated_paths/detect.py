"""The calibrated pair-count scan test, its sign variants, and a GLRT baseline."""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from correlated_paths import DEFAULT_SETTINGS
from correlated_paths.choices import EngineChoices, SignChoices
from correlated_paths.exceptions import DomainError
from correlated_paths.graph import Path
from correlated_paths.model import ARCovariance, CorrelationModel, Sample, simulate_null
from correlated_paths.paths import enumerate_path_array, log_cardinality
from correlated_paths.rng import STREAM_CALIBRATION
from correlated_paths.utils.scan_engines import BeamEngine, ExhaustiveEngine, OrientedDPEngine, pair_hits
from correlated_paths.utils.stats import normal_quantile, two_sided_mass

logger = logging.getLogger(__name__)

# Bisection runs in u = log t; this keeps |dt| far below 1e-10 on the whole branch.
CALIBRATION_XTOL = 1e-13
SMALLEST_THRESHOLD = 1e-300
POWER_QUANTILE_LEVEL = 0.8


def pt(t):
    """P(|Z| <= t) = 2 * Phi(t) - 1 for a standard normal Z."""
    if t < 0:
        raise DomainError(f"p_t needs t >= 0, got {t}")
    return float(two_sided_mass(t))


def h(x):
    """x - log(x) - 1; decreasing on (0, 1) with minimum 0 at x = 1."""
    if x <= 0:
        raise DomainError(f"h(x) needs x > 0, got {x}")
    return x - math.log(x) - 1.0


def calibration_target(k, log_card):
    """Right-hand side max((8 / k) * log|C|, 1) of the calibration equation."""
    return max(8.0 * log_card / k, 1.0)


def calibrate(k, log_card):
    """Return the threshold t solving h(2 p_t) = max((8 / k) log|C|, 1) with p_t < 1/2.

    On that branch h(2 p_t) falls strictly from +inf (t -> 0) to 0 (p_t = 1/2), so the root is
    unique; it is bracketed in log t and refined by bisection.

    Args:
        k (int): Path length in nodes, at least 2.
        log_card (float): log|C|, non-negative.

    Returns:
        float: The calibrated threshold t.
    """
    if k < 2:
        raise DomainError(f"Calibration needs k >= 2, got k={k}")
    if log_card < 0:
        raise DomainError(f"Calibration needs log|C| >= 0, got {log_card}")
    target = calibration_target(k, log_card)

    def excess(u):
        p = pt(math.exp(u))
        if p <= 0.0:
            return math.inf
        return h(2.0 * p) - target

    upper = math.log(normal_quantile(0.75))
    lower = upper - 1.0
    while excess(lower) <= 0:
        lower = upper - 2.0 * (upper - lower)
        if lower < math.log(SMALLEST_THRESHOLD):
            raise DomainError(f"Calibration target {target} is too large to bracket (k={k}, log|C|={log_card})")
    t = math.exp(optimize.bisect(excess, lower, upper, xtol=CALIBRATION_XTOL))
    logger.info("Calibrated t=%.12g for k=%s, log|C|=%.6g (target %.6g)", t, k, log_card, target)
    return t


def psi_min(t):
    """Smallest psi covered by the power guarantee: 1 - (t / Phi^{-1}(4/5))**2."""
    if t <= 0:
        raise DomainError(f"psi_min needs t > 0, got {t}")
    return 1.0 - (t / normal_quantile(POWER_QUANTILE_LEVEL)) ** 2


def null_error_bound(k):
    """Null rejection bound 2 exp(-k / 8) at the calibrated threshold."""
    return 2.0 * math.exp(-k / 8.0)


def type_ii_error_bound(k):
    """Missed-detection bound 1 / (log k)**2 for psi >= psi_min(t)."""
    if k < 2:
        raise DomainError(f"The type II bound needs k >= 2, got k={k}")
    return 1.0 / math.log(k) ** 2


def null_pair_score_mean(t, k):
    """Null mean (k - 1) p_t of the pair count along one path."""
    return (k - 1) * pt(t)


def alternative_pair_probability(t, psi, sign=SignChoices.PLUS):
    """Probability q that one consecutive pair of an AR(1) block passes the threshold.

    The difference of two consecutive block values has variance 2(1 - psi), their sum 2(1 + psi).
    """
    spread = 1.0 - psi if SignChoices(sign) == SignChoices.PLUS else 1.0 + psi
    if spread <= 0:
        return 1.0
    return pt(t / math.sqrt(spread))


def bennett_tail(n, p, v):
    """Bennett upper bound exp(-n p phi(v / (n p))) on P(Bin(n, p) - n p >= v), phi(u) = (1+u)log(1+u) - u."""
    if n <= 0 or not 0 < p <= 1 or v < 0:
        raise DomainError(f"Bennett tail needs n > 0, p in (0, 1] and v >= 0, got n={n}, p={p}, v={v}")
    mean = n * p
    u = v / mean
    return math.exp(-mean * ((1.0 + u) * math.log1p(u) - u))


def _pair_signs(sign):
    sign = SignChoices(sign)
    if sign == SignChoices.BOTH:
        return (SignChoices.PLUS, SignChoices.MINUS)
    return (sign,)


def _values(sample):
    return sample.values if isinstance(sample, Sample) else np.asarray(sample, dtype=np.float64)


def pair_score(sample, path, t, sign):
    """Count consecutive pairs along ``path`` with |X_{s_{j+1}} -/+ X_{s_j}| <= sqrt(2) t."""
    sign = SignChoices(sign)
    if sign == SignChoices.BOTH:
        raise DomainError("pair_score compares one sign at a time; use plus or minus")
    nodes = np.asarray(tuple(path), dtype=np.int64)
    return int(np.count_nonzero(pair_hits(_values(sample), nodes[:-1], nodes[1:], t, sign)))


def scan_log_cardinality(path_class, sign, budget=None):
    """log|C| used for calibration; BOTH adds log 2 for the Bonferroni split over two scans."""
    log_card = log_cardinality(path_class, budget=budget)
    if SignChoices(sign) == SignChoices.BOTH:
        log_card += math.log(2.0)
    return log_card


@dataclass(frozen=True)
class TestConfig:
    """A calibrated test: reject iff the scan maximum exceeds k / 2."""

    t: float
    k: int
    sign: SignChoices = SignChoices.PLUS

    def __post_init__(self):
        """Validate the threshold and length."""
        if self.t <= 0:
            raise DomainError(f"Test threshold must be positive, got t={self.t}")
        if self.k < 2:
            raise DomainError(f"Test length must be at least 2, got k={self.k}")
        object.__setattr__(self, "sign", SignChoices(self.sign))

    @classmethod
    def calibrated(cls, path_class, sign=SignChoices.PLUS, budget=None):
        """Calibrate on ``path_class`` with the cardinality of :func:`scan_log_cardinality`."""
        sign = SignChoices(sign)
        log_card = scan_log_cardinality(path_class, sign, budget=budget)
        return cls(t=calibrate(path_class.k, log_card), k=path_class.k, sign=sign)

    def rejects(self, v_star):
        """Decision rule V* > k / 2."""
        return v_star > self.k / 2


@dataclass(frozen=True)
class ScanEngine:
    """Which maximization engine to run, and with what enumeration budget."""

    kind: EngineChoices
    width: int = None
    budget: int = DEFAULT_SETTINGS["enumeration_budget"]

    def __post_init__(self):
        """Normalize the kind and check the beam width."""
        object.__setattr__(self, "kind", EngineChoices(self.kind))
        if self.kind == EngineChoices.BEAM and (self.width is None or self.width < 1):
            raise DomainError(f"Beam engines need a positive width, got {self.width}")

    def __str__(self):
        """Stringify as the engine string accepted by :meth:`parse`."""
        return f"beam:{self.width}" if self.kind == EngineChoices.BEAM else str(self.kind)

    @classmethod
    def parse(cls, text, budget=None):
        """Parse ``exhaustive``, ``dp`` or ``beam:<width>``."""
        budget = DEFAULT_SETTINGS["enumeration_budget"] if budget is None else budget
        kind, _, width = str(text).strip().partition(":")
        try:
            kind = EngineChoices(kind)
        except ValueError as err:
            raise DomainError(f"Unknown engine {text!r}; expected one of {EngineChoices.values()}") from err
        if kind == EngineChoices.BEAM:
            if not width.isdigit():
                raise DomainError(f"Beam engine needs an integer width, as in beam:64, got {text!r}")
            return cls(kind, width=int(width), budget=budget)
        if width:
            raise DomainError(f"Engine {kind} takes no parameter, got {text!r}")
        return cls(kind, budget=budget)

    @property
    def exact(self):
        """True for engines that return the true maximum."""
        return self.kind != EngineChoices.BEAM

    def build(self):
        """Return the engine implementation."""
        if self.kind == EngineChoices.EXHAUSTIVE:
            return ExhaustiveEngine(self.budget)
        if self.kind == EngineChoices.ORIENTED_DP:
            return OrientedDPEngine(self.budget)
        return BeamEngine(self.budget, self.width)


@dataclass(frozen=True)
class DetectionOutcome:
    """Result of one scan: the maximum pair count, a path achieving it, and the decision."""

    v_star: int
    argmax_path: Path
    rejected: bool
    exact: bool
    sign: SignChoices
    t: float

    def to_json(self):
        """Return a JSON-serializable dict."""
        return {
            "v_star": self.v_star,
            "argmax_path": list(self.argmax_path.nodes),
            "rejected": self.rejected,
            "exact": self.exact,
            "sign": str(self.sign),
            "t": self.t,
        }


def scan(sample, path_class, t, sign, engine):
    """Compute V_t* over ``path_class`` and apply the rule V_t* > k / 2.

    With sign BOTH the two comparisons are scanned separately and the larger maximum is kept
    (PLUS on ties), so the test rejects iff either one does.

    Raises:
        DomainError: If ``engine`` cannot run on ``path_class``.
        BudgetExceededError: If an exhaustive scan would exceed the engine budget.
    """
    if not isinstance(engine, ScanEngine):
        engine = ScanEngine.parse(engine)
    config = TestConfig(t=t, k=path_class.k, sign=sign)
    implementation = engine.build()
    implementation.check_admissible(path_class)
    values = _values(sample)
    best = None
    for pair_sign in _pair_signs(config.sign):
        v_star, path, exact = implementation.run(values, path_class, t, pair_sign)
        if best is None or v_star > best[0]:
            best = (v_star, path, exact, pair_sign)
    v_star, path, exact, pair_sign = best
    logger.debug("Scan with %s: V*=%s along %s", engine, v_star, path)
    return DetectionOutcome(
        v_star=v_star, argmax_path=path, rejected=config.rejects(v_star), exact=exact, sign=pair_sign, t=t
    )


def run_test(sample, path_class, sign, engine, budget=None):
    """Calibrate on ``path_class``, scan, and return whether the null is rejected."""
    config = TestConfig.calibrated(path_class, sign=sign, budget=budget)
    return scan(sample, path_class, config.t, config.sign, engine).rejected


@dataclass(frozen=True)
class GLRTOutcome:
    """Largest x_S^T (I - Gamma^{-1}) x_S over the class, and the first path achieving it."""

    statistic: float
    argmax_path: Path

    def to_json(self):
        """Return a JSON-serializable dict."""
        return {"statistic": self.statistic, "argmax_path": list(self.argmax_path.nodes)}


def glrt_scan(sample, path_class, model, engine=EngineChoices.EXHAUSTIVE, budget=None):
    """Maximize the GLRT quadratic form over an enumerated class.

    The statistic is raw; :func:`glrt_null_quantile` supplies a Monte Carlo threshold.

    Raises:
        DomainError: If an engine other than exhaustive is requested.
        BudgetExceededError: If the class cannot be enumerated within ``budget``.
    """
    kind = engine.kind if isinstance(engine, ScanEngine) else EngineChoices(engine)
    if kind != EngineChoices.EXHAUSTIVE:
        raise DomainError(f"The GLRT is only computed by exhaustive enumeration, got engine {kind}")
    if not isinstance(model, CorrelationModel):
        model = CorrelationModel(model)
    paths = enumerate_path_array(path_class, budget=budget)
    statistics = ARCovariance(path_class.k, model.psi).quadratic_form(_values(sample)[paths])
    best = int(np.argmax(statistics))
    return GLRTOutcome(statistic=float(statistics[best]), argmax_path=Path(tuple(paths[best].tolist())))


def glrt_null_quantile(path_class, model, trials, alpha=0.05, seed=0, budget=None):
    """Return the empirical (1 - alpha) null quantile of the GLRT statistic."""
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if not isinstance(model, CorrelationModel):
        model = CorrelationModel(model)
    paths = enumerate_path_array(path_class, budget=budget)
    covariance = ARCovariance(path_class.k, model.psi)
    statistics = np.empty(trials, dtype=np.float64)
    for trial in range(trials):
        values = simulate_null(path_class.lattice, seed, stream=(STREAM_CALIBRATION, trial)).values
        statistics[trial] = covariance.quadratic_form(values[paths]).max()
    quantile = float(np.quantile(statistics, 1.0 - alpha, method="higher"))
    logger.info("GLRT null %.3g-quantile over %s trials: %.6g", 1.0 - alpha, trials, quantile)
    return quantile
