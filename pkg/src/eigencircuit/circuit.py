"""Mathematical objects of the eigenvector feedback circuit.

Builds the implemented eigenvalue (a deliberate mismatch below the true
dominant eigenvalue), the diagonal feedback normalization, and the 2N x 2N
state matrix whose first-order dynamics describe the transient response of
the amplifier loop.  Matrix entries are dimensionless conductance ratios
(unit: 100 uS); eigenvalues share that unit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix, as_vector, power_iteration


@dataclass(frozen=True)
class OpAmpParams:
    """Single-pole op-amp model: open-loop gain L0/(1 + s/omega0).

    l0       -- DC open-loop gain (dimensionless, >= 1e3)
    omega0   -- 3-dB bandwidth in rad/s
    v_supp   -- symmetric supply rail in volts (outputs clip at +/- v_supp)

    Defaults give an 8 MHz gain-bandwidth product, representative of the
    precision amplifiers such a circuit is built from.  All simulated
    times scale with 1/(l0*omega0), so absolute results are
    parameter-dependent; pass explicit values to model a specific part.
    """

    l0: float = 1e5
    omega0: float = 2.0 * math.pi * 80.0
    v_supp: float = 1.0

    def __post_init__(self):
        if self.l0 < 1e3:
            raise ValueError("l0 must be >= 1e3 (high-gain op-amp model)")
        if self.omega0 <= 0.0:
            raise ValueError("omega0 must be positive")
        if self.v_supp <= 0.0:
            raise ValueError("v_supp must be positive")

    @property
    def gain_bandwidth(self) -> float:
        """l0*omega0, the gain-bandwidth product in rad/s."""
        return self.l0 * self.omega0

    @property
    def gbw_hz(self) -> float:
        return self.gain_bandwidth / (2.0 * math.pi)

    @classmethod
    def from_gbw(cls, gbw_hz: float, l0: float = 1e5, v_supp: float = 1.0):
        """Build from a gain-bandwidth product in Hz (the datasheet number)."""
        return cls(l0=l0, omega0=2.0 * math.pi * gbw_hz / l0, v_supp=v_supp)


def map_eigenvalue(lambda_max: float, delta: float) -> float:
    """Implemented eigenvalue (1 - delta) * lambda_max.

    delta > 0 makes the circuit grow toward the dominant eigenvector;
    delta <= 0 is permitted for decay experiments.
    """
    if lambda_max <= 0.0:
        raise ValueError("lambda_max must be positive")
    if delta >= 1.0:
        raise ValueError("delta must be < 1")
    return (1.0 - delta) * lambda_max


def _normalization_vector(a: np.ndarray, lambdas: np.ndarray) -> np.ndarray:
    denom = lambdas + a.sum(axis=1)
    if (denom <= 0.0).any():
        raise ValueError(
            "normalization denominator lambda_k + row_sum_k must be positive"
        )
    return 1.0 / denom


def build_normalization(a, lambdas) -> np.ndarray:
    """Diagonal matrix diag(1/(lambda_k + row_sum_k(A))).

    Off-diagonal entries are exactly zero.
    """
    a = as_matrix(a, square=True, positive=True)
    lambdas = as_vector(lambdas)
    if lambdas.shape[0] != a.shape[0]:
        raise ValueError("lambdas length must match matrix size")
    return np.diag(_normalization_vector(a, lambdas))


def build_state_matrix(a, lambdas) -> np.ndarray:
    """2N x 2N first-order state matrix of the feedback dynamics.

    Block layout, with U the diagonal normalization and Lam = diag(lambdas):

        [ 0               (1/2) I          ]
        [ U (A - Lam)    -(Lam U + (1/2) I) ]

    A uniform lambdas vector reproduces the single-mismatch form; per-output
    values model feedback-conductance variation.
    """
    a = as_matrix(a, square=True, positive=True)
    lambdas = as_vector(lambdas)
    n = a.shape[0]
    if lambdas.shape[0] != n:
        raise ValueError("lambdas length must match matrix size")
    u = _normalization_vector(a, lambdas)
    m = np.zeros((2 * n, 2 * n))
    m[:n, n:] = 0.5 * np.eye(n)
    m[n:, :n] = u[:, None] * (a - np.diag(lambdas))
    m[n:, n:] = -(np.diag(lambdas * u) + 0.5 * np.eye(n))
    return m


def sample_variation(delta_max: float, n: int, seed: int) -> np.ndarray:
    """n mismatch values drawn i.i.d. uniform on the open interval (0, delta_max).

    Deterministic per seed.  Zero draws (measure zero, but the generator's
    half-open interval admits them) are redrawn to keep the interval open.
    """
    if delta_max <= 0.0:
        raise ValueError("delta_max must be positive")
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    deltas = rng.uniform(0.0, delta_max, size=n)
    while (deltas == 0.0).any():
        zero = deltas == 0.0
        deltas[zero] = rng.uniform(0.0, delta_max, size=int(zero.sum()))
    return deltas


@dataclass(frozen=True)
class EigenSystem:
    """A coefficient matrix programmed into the circuit, ready to simulate.

    a           -- positive square coefficient matrix (conductance ratios)
    lambda_max  -- dominant eigenvalue of `a`
    delta       -- uniform mismatch, or None when lambdas vary per output
    lambdas     -- implemented eigenvalue per output, length N
    norm_diag   -- diagonal of the normalization matrix U
    state_matrix-- the 2N x 2N dynamics matrix
    params      -- op-amp model
    """

    a: np.ndarray
    lambda_max: float
    delta: float | None
    lambdas: np.ndarray
    norm_diag: np.ndarray
    state_matrix: np.ndarray
    params: OpAmpParams

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def normalization(self) -> np.ndarray:
        """The full diagonal normalization matrix U."""
        return np.diag(self.norm_diag)

    @classmethod
    def build(
        cls,
        a,
        delta: float,
        params: OpAmpParams | None = None,
        lambda_max: float | None = None,
    ) -> "EigenSystem":
        """Uniform-mismatch system: every output implements (1-delta)*lambda_max.

        lambda_max is computed by power iteration when not supplied (pass it
        explicitly for matrices whose dominant eigenvalue is known, e.g. 1
        for column-stochastic transition matrices).
        """
        a = as_matrix(a, square=True, positive=True)
        params = params or OpAmpParams()
        if lambda_max is None:
            lambda_max = power_iteration(a).value
        lam = map_eigenvalue(lambda_max, delta)
        lambdas = np.full(a.shape[0], lam)
        return cls(
            a=a,
            lambda_max=float(lambda_max),
            delta=float(delta),
            lambdas=lambdas,
            norm_diag=_normalization_vector(a, lambdas),
            state_matrix=build_state_matrix(a, lambdas),
            params=params,
        )

    @classmethod
    def build_varied(
        cls,
        a,
        deltas,
        params: OpAmpParams | None = None,
        lambda_max: float | None = None,
    ) -> "EigenSystem":
        """Per-output mismatch: output i implements (1-deltas[i])*lambda_max."""
        a = as_matrix(a, square=True, positive=True)
        deltas = as_vector(deltas)
        if deltas.shape[0] != a.shape[0]:
            raise ValueError("deltas length must match matrix size")
        if (deltas >= 1.0).any():
            raise ValueError("every delta must be < 1")
        params = params or OpAmpParams()
        if lambda_max is None:
            lambda_max = power_iteration(a).value
        lambdas = (1.0 - deltas) * float(lambda_max)
        return cls(
            a=a,
            lambda_max=float(lambda_max),
            delta=None,
            lambdas=lambdas,
            norm_diag=_normalization_vector(a, lambdas),
            state_matrix=build_state_matrix(a, lambdas),
            params=params,
        )

    def with_delta(self, delta: float) -> "EigenSystem":
        """Same matrix and op-amp model, re-targeted to a new uniform mismatch."""
        return EigenSystem.build(
            self.a, delta, params=self.params, lambda_max=self.lambda_max
        )

    def to_json(self) -> str:
        doc = {
            "a": self.a.tolist(),
            "l0": self.params.l0,
            "omega0": self.params.omega0,
            "v_supp": self.params.v_supp,
            "lambda_max": self.lambda_max,
        }
        if self.delta is not None:
            doc["delta"] = self.delta
        else:
            doc["lambdas"] = self.lambdas.tolist()
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "EigenSystem":
        doc = json.loads(text)
        params = OpAmpParams(
            l0=doc["l0"], omega0=doc["omega0"], v_supp=doc["v_supp"]
        )
        lambda_max = doc.get("lambda_max")
        if "delta" in doc:
            return cls.build(
                doc["a"], doc["delta"], params=params, lambda_max=lambda_max
            )
        lambdas = as_vector(doc["lambdas"])
        if lambda_max is None:
            lambda_max = power_iteration(as_matrix(doc["a"])).value
        deltas = 1.0 - lambdas / float(lambda_max)
        return cls.build_varied(
            doc["a"], deltas, params=params, lambda_max=lambda_max
        )
