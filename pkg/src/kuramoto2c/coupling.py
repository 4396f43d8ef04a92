"""Parameter containers for the two-community model."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import DomainError


def check_psi(psi: float) -> float:
    """Accept only the steady-state phase offsets 0 and pi."""
    if psi == 0.0 or psi == math.pi:
        return float(psi)
    raise DomainError(f"phase offset must be exactly 0 or pi, got {psi!r}")


@dataclass(frozen=True)
class SymmetricCoupling:
    """Equal intra-community coupling ``K`` and inter-community coupling ``L``.

    ``psi`` is the fixed offset between the two community phases; only 0 and
    pi can occur in a steady state without disorder.
    """

    K: float
    L: float
    psi: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.K) and self.K > 0):
            raise DomainError(f"K must be positive, got {self.K!r}")
        if not math.isfinite(self.L) or self.L == 0:
            raise DomainError(f"L must be finite and non-zero, got {self.L!r}")
        check_psi(self.psi)

    @property
    def effective_l(self) -> float:
        """``L cos(psi)``, computed without rounding in cos(pi)."""
        return self.L if self.psi == 0.0 else -self.L

    @property
    def symmetric_gain(self) -> float:
        """Effective coupling ``K + L cos(psi)`` seen by a symmetric state."""
        return self.K + self.effective_l


@dataclass(frozen=True)
class CouplingConfig:
    """General couplings ``K1, K2`` (intra), ``L1, L2`` (inter), community
    fractions ``alpha1 + alpha2 = 1`` and noise strength ``D``.

    ``test_mode`` lifts the positivity/non-zero requirements so null-model runs
    with vanishing couplings can be configured.
    """

    K1: float
    K2: float
    L1: float
    L2: float
    alpha1: float = 0.5
    alpha2: float = 0.5
    D: float = 1.0
    test_mode: bool = False

    def __post_init__(self):
        values = (self.K1, self.K2, self.L1, self.L2, self.alpha1, self.alpha2, self.D)
        if not all(math.isfinite(v) for v in values):
            raise DomainError("coupling parameters must be finite")
        if abs(self.alpha1 + self.alpha2 - 1.0) > 1e-12:
            raise DomainError("alpha1 + alpha2 must equal 1")
        if self.alpha1 <= 0 or self.alpha2 <= 0:
            raise DomainError("community fractions must be positive")
        if self.D <= 0:
            raise DomainError("noise strength D must be positive")
        if self.test_mode:
            return
        if self.K1 <= 0 or self.K2 <= 0:
            raise DomainError("K1 and K2 must be positive")
        if self.L1 == 0 or self.L2 == 0:
            raise DomainError("L1 and L2 must be non-zero")

    @classmethod
    def symmetric(cls, K: float, L: float, D: float = 1.0, test_mode: bool = False) -> "CouplingConfig":
        return cls(K1=K, K2=K, L1=L, L2=L, alpha1=0.5, alpha2=0.5, D=D, test_mode=test_mode)

    def swapped(self) -> "CouplingConfig":
        """The same model with community labels exchanged."""
        return CouplingConfig(
            K1=self.K2, K2=self.K1, L1=self.L2, L2=self.L1,
            alpha1=self.alpha2, alpha2=self.alpha1, D=self.D, test_mode=self.test_mode,
        )

    def to_dict(self) -> dict:
        return asdict(self)
