"""Dimensionless film parameters and the derived length ratios."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

# Inequality checkers warn when run above this epsilon; the value is a convention,
# not a derived constant.
EPS0_DEFAULT = 1e-2

# Universal lower bound constant: F >= -LOWER_BOUND_CONSTANT * |Omega|.
LOWER_BOUND_CONSTANT = math.pi**2 * math.e / 4


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class ParameterSet:
    epsilon: float
    Q: float
    log_eps: float
    omega: float
    d_over_s: float
    s_over_t: float
    d_over_t: float

    def as_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "Q": self.Q,
            "log_eps": self.log_eps,
            "omega": self.omega,
            "d_over_s": self.d_over_s,
            "s_over_t": self.s_over_t,
            "d_over_t": self.d_over_t,
        }


def derive(epsilon: float, Q: float = 2.0) -> ParameterSet:
    epsilon = float(epsilon)
    Q = float(Q)
    if not 0.0 < epsilon < 1.0:
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not Q > 1.0:
        raise ParameterError(f"quality factor must exceed 1, got {Q}")
    log_eps = abs(math.log(epsilon))
    return ParameterSet(
        epsilon=epsilon,
        Q=Q,
        log_eps=log_eps,
        omega=2 * math.pi * (Q - 1) * epsilon / log_eps,
        d_over_s=epsilon * math.sqrt(Q - 1),
        s_over_t=log_eps / (2 * math.pi * (Q - 1) * epsilon),
        d_over_t=log_eps / (2 * math.pi * math.sqrt(Q - 1)),
    )


def onset_threshold(epsilon: float) -> float:
    """Critical diameter below which the uniform states are the only minimizers."""
    if not 0.0 < epsilon < 1.0:
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    factor = 1.0 - 2.0 / abs(math.log(epsilon))
    if factor <= 0.0:
        raise ParameterError("threshold formula nonpositive for epsilon >= exp(-2)")
    return math.pi / (2 * math.e) * factor


def onset_threshold_limit() -> float:
    return math.pi / (2 * math.e)


def check_small_epsilon(epsilon: float, eps0: float = EPS0_DEFAULT) -> bool:
    """Warn when an asymptotic statement is checked at a large epsilon."""
    if epsilon > eps0:
        warnings.warn(
            f"epsilon={epsilon} exceeds eps0={eps0}; asymptotic bounds may not apply",
            stacklevel=2,
        )
        return False
    return True
