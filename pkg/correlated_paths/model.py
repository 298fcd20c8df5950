"""Gaussian data under both hypotheses, the AR(1) path covariance, and likelihood ratios."""

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from correlated_paths.exceptions import DomainError
from correlated_paths.graph import Path, TorusLattice, is_valid_path
from correlated_paths.paths import as_support
from correlated_paths.rng import STREAM_SIMULATION, substream

logger = logging.getLogger(__name__)

SIDECAR_SUFFIX = ".json"


def _check_psi(psi):
    if not -1.0 < psi < 1.0:
        raise DomainError(f"Correlation psi must lie in (-1, 1), got {psi}")


@dataclass(frozen=True)
class CorrelationModel:
    """Correlation ``psi`` between consecutive path nodes.

    ``phi`` and ``sigma2_phi`` are the parameters of the equivalent conditional (GMRF) form
    Y_i = phi * (Y_{i-1} + Y_{i+1}) + eps_i, always derived from ``psi``.
    """

    psi: float

    def __post_init__(self):
        """Check that ``psi`` lies strictly inside (-1, 1)."""
        _check_psi(self.psi)
        object.__setattr__(self, "psi", float(self.psi))

    @property
    def phi(self):
        """psi / (1 + psi**2); its magnitude never exceeds 1/2."""
        return self.psi / (1.0 + self.psi**2)

    @property
    def sigma2_phi(self):
        """(1 - psi**2) / (1 + psi**2), in (0, 1]."""
        return (1.0 - self.psi**2) / (1.0 + self.psi**2)

    def covariance(self, k):
        """Return the AR(1) covariance of a path of ``k`` nodes."""
        return ARCovariance(k, self.psi)


@dataclass(frozen=True)
class ARCovariance:
    """Covariance Gamma with entries psi**|i-j| of an AR(1) block of ``k`` nodes."""

    k: int
    psi: float

    def __post_init__(self):
        """Validate the block size and correlation."""
        if self.k < 2:
            raise DomainError(f"AR(1) blocks need k >= 2, got k={self.k}")
        _check_psi(self.psi)

    def gamma(self):
        """Explicit k x k covariance matrix."""
        lags = np.abs(np.subtract.outer(np.arange(self.k), np.arange(self.k)))
        return np.power(self.psi, lags, dtype=np.float64)

    def gamma_inverse(self):
        """Tridiagonal inverse of :meth:`gamma`, entry by entry in closed form.

        Interior diagonal entries are 1/sigma2_phi, the two end entries 1/(1 - psi**2), and the
        first off-diagonals -phi/sigma2_phi = -psi/(1 - psi**2).
        """
        one_minus = 1.0 - self.psi**2
        inverse = np.zeros((self.k, self.k), dtype=np.float64)
        np.fill_diagonal(inverse, (1.0 + self.psi**2) / one_minus)
        inverse[0, 0] = inverse[-1, -1] = 1.0 / one_minus
        off = np.arange(self.k - 1)
        inverse[off, off + 1] = inverse[off + 1, off] = -self.psi / one_minus
        return inverse

    def log_det(self):
        """log det Gamma = (k - 1) * log(1 - psi**2)."""
        return (self.k - 1) * math.log1p(-(self.psi**2))

    def quadratic_form(self, x):
        """Evaluate x^T (I - Gamma^{-1}) x along the last axis in O(k).

        Args:
            x (numpy.ndarray): Array whose last axis has length k; leading axes are batched.

        Returns:
            numpy.ndarray | float: One value per leading index.
        """
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.k:
            raise DomainError(f"Expected {self.k} values along the last axis, got {x.shape[-1]}")
        psi2 = self.psi**2
        total = np.sum(x * x, axis=-1)
        interior = np.sum(x[..., 1:-1] ** 2, axis=-1)
        lagged = np.sum(x[..., 1:] * x[..., :-1], axis=-1)
        precision_form = (total + psi2 * interior - 2.0 * self.psi * lagged) / (1.0 - psi2)
        return total - precision_form


def ar1_block(innovations, psi):
    """Turn i.i.d. standard normal innovations into a stationary AR(1) block along the last axis.

    X_1 = e_1 and X_{j+1} = psi * X_j + sqrt(1 - psi**2) * e_{j+1}. At psi = 0 the block is
    the innovations themselves.
    """
    _check_psi(psi)
    innovations = np.asarray(innovations, dtype=np.float64)
    block = np.empty_like(innovations)
    block[..., 0] = innovations[..., 0]
    scale = math.sqrt(1.0 - psi**2)
    for j in range(1, innovations.shape[-1]):
        block[..., j] = psi * block[..., j - 1] + scale * innovations[..., j]
    return block


@dataclass
class Sample:
    """One observation vector X indexed by node, with where it came from.

    Attributes:
        values (numpy.ndarray): float64 vector of length n.
        lattice (TorusLattice): Lattice the values live on.
        provenance (dict): ``{"kind": "null"}`` or ``{"kind": "alternative", "path": [...], "psi": psi}``.
        seed (int): Master seed of the generator that drew the values.
        stream (tuple): Stream indices under ``seed``.
    """

    values: np.ndarray
    lattice: TorusLattice
    provenance: dict = field(default_factory=lambda: {"kind": "null"})
    seed: int = 0
    stream: tuple = ()

    def __post_init__(self):
        """Check length and finiteness of the values."""
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.lattice.n,):
            raise DomainError(f"Sample has shape {self.values.shape}, expected ({self.lattice.n},) for {self.lattice}")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("Sample values must be finite")

    def along(self, path):
        """Return the sub-vector x_S in path order."""
        return self.values[np.asarray(tuple(path), dtype=np.int64)]

    def save(self, destination):
        """Write the values as little-endian float64 and the metadata as a JSON sidecar."""
        destination = str(destination)
        self.values.astype("<f8").tofile(destination)
        sidecar = {
            "d": self.lattice.d,
            "m": self.lattice.m,
            "seed": self.seed,
            "stream": list(self.stream),
            "provenance": self.provenance,
        }
        with open(destination + SIDECAR_SUFFIX, "w", encoding="utf-8") as handle:
            json.dump(sidecar, handle, indent=2)
            handle.write("\n")
        logger.info("Wrote sample to %s", destination)

    @classmethod
    def load(cls, source):
        """Read a sample written by :meth:`save`."""
        source = str(source)
        with open(source + SIDECAR_SUFFIX, "r", encoding="utf-8") as handle:
            sidecar = json.load(handle)
        lattice = TorusLattice(sidecar["d"], sidecar["m"])
        values = np.fromfile(source, dtype="<f8").astype(np.float64)
        return cls(
            values=values,
            lattice=lattice,
            provenance=sidecar.get("provenance", {"kind": "null"}),
            seed=sidecar.get("seed", 0),
            stream=tuple(sidecar.get("stream", ())),
        )


def simulate_null(lattice, seed, stream=(STREAM_SIMULATION,)):
    """Draw n i.i.d. standard normals, one per node."""
    values = substream(seed, *stream).standard_normal(lattice.n)
    return Sample(values=values, lattice=lattice, seed=seed, stream=tuple(stream))


def simulate_alternative(lattice, path, model, seed, stream=(STREAM_SIMULATION,)):
    """Draw a sample in which ``path`` carries an AR(1) block of correlation ``model.psi``.

    The generator draws the same n normals as :func:`simulate_null`; the path coordinates are
    then replaced by the AR(1) recursion over those normals. Off-path coordinates are therefore
    identical to the null draw of the same stream, and ``psi = 0`` reproduces it exactly.

    Raises:
        DomainError: If ``path`` is not a self-avoiding path of ``lattice``.
    """
    path = path if isinstance(path, Path) else Path(path)
    if not is_valid_path(lattice, path):
        raise DomainError(f"Path {path} is not a self-avoiding path of {lattice}")
    if not isinstance(model, CorrelationModel):
        model = CorrelationModel(model)
    values = substream(seed, *stream).standard_normal(lattice.n)
    index = path.as_array()
    values[index] = ar1_block(values[index], model.psi)
    provenance = {"kind": "alternative", "path": list(path.nodes), "psi": model.psi}
    return Sample(values=values, lattice=lattice, provenance=provenance, seed=seed, stream=tuple(stream))


def _psi_of(model):
    return model.psi if isinstance(model, CorrelationModel) else CorrelationModel(model).psi


def _values_of(sample):
    return sample.values if isinstance(sample, Sample) else np.asarray(sample, dtype=np.float64)


def path_log_likelihood_ratios(values, paths, psi):
    """Log-likelihood ratios log L_S for every path, batched over samples.

    Args:
        values (numpy.ndarray): Samples of shape (..., n).
        paths (numpy.ndarray): Node indices of shape (P, k).
        psi (float): Correlation.

    Returns:
        numpy.ndarray: Shape (..., P).
    """
    paths = np.asarray(paths, dtype=np.int64)
    covariance = ARCovariance(paths.shape[-1], psi)
    x = np.asarray(values, dtype=np.float64)[..., paths]
    return 0.5 * covariance.quadratic_form(x) - 0.5 * covariance.log_det()


def log_likelihood_ratio(sample, path, model):
    """Return log L_S(x) = x_S^T (I - Gamma^{-1}) x_S / 2 - log det(Gamma) / 2."""
    nodes = np.asarray(tuple(path), dtype=np.int64)
    return float(path_log_likelihood_ratios(_values_of(sample), nodes[np.newaxis, :], _psi_of(model))[0])


def mixture_likelihood_ratio(sample, prior, model, budget=None):
    """Return log sum_S nu(S) L_S(x) for a prior over paths.

    Args:
        sample (Sample | numpy.ndarray): Observation, or a batch of shape (..., n).
        prior (PathClass | PathSupport | Path | list): Uniform over an enumerable class, or an
            explicit weighted support.
        model (CorrelationModel | float): Correlation.
        budget (int): Enumeration budget for class priors.

    Raises:
        BudgetExceededError: If a class prior cannot be enumerated within ``budget``.
    """
    support = as_support(prior, budget=budget)
    llrs = path_log_likelihood_ratios(_values_of(sample), support.as_array(), _psi_of(model))
    result = special.logsumexp(llrs, axis=-1, b=support.weight_array())
    return float(result) if np.ndim(result) == 0 else result
