"""Evaluable potentials with the regularity data used for error bounds.

Quadratic potentials keep exact rational coefficients so that cocycle
series and periodic-orbit averages can be computed without rounding;
everything also evaluates on numpy arrays for the grid operators.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .dynamics import SymbolWord

__all__ = [
    "PotentialSpec",
    "polynomial_potential",
    "gauss_log_potential",
    "custom_potential",
    "perturbed_potential",
    "QUAD_DIRAC",
    "QUAD_PERIOD2",
    "QUAD_CONVEX",
    "LINEAR",
    "GAUSS_LOG",
]


@dataclass(frozen=True)
class PotentialSpec:
    """A potential A with Hoelder/Lipschitz data for truncation bounds.

    holder_constant bounds |A(x) - A(z)| / d(x, z) on the domain where the
    cocycle series evaluates A (for the Gauss-log potential that domain is
    the union of branch images, bounded away from 0).  contraction is the
    per-step rate of the system's inverse branches.
    """

    name: str
    fn: Callable
    holder_constant: float
    contraction: float = 0.5
    coeffs: tuple[Fraction, Fraction, Fraction] | None = None

    def __call__(self, x):
        if isinstance(x, SymbolWord):
            x = x.exact_value()
        if isinstance(x, Fraction):
            if self.coeffs is not None:
                a, b, c = self.coeffs
                return a + b * x + c * x * x
            x = float(x)
        return self.fn(x)


def perturbed_potential(p: PotentialSpec, r: PotentialSpec, eps: float) -> PotentialSpec:
    """p + eps*r, with the Lipschitz data combined accordingly."""

    def fn(x):
        return p(x) + eps * r(x)

    return PotentialSpec(
        f"{p.name}+{eps:g}*{r.name}",
        fn,
        p.holder_constant + abs(eps) * r.holder_constant,
        max(p.contraction, r.contraction),
    )


def polynomial_potential(a, b, c, name: str | None = None) -> PotentialSpec:
    """A(x) = a + b x + c x^2 with exact rational coefficients."""
    af, bf, cf = Fraction(a), Fraction(b), Fraction(c)
    a_, b_, c_ = float(af), float(bf), float(cf)

    def fn(x):
        return a_ + b_ * x + c_ * x * x

    # Lipschitz constant of b + 2 c x on [0, 1]
    lip = abs(b_) + 2 * abs(c_)
    label = name or f"poly({a_:g},{b_:g},{c_:g})"
    return PotentialSpec(label, fn, holder_constant=lip, contraction=0.5, coeffs=(af, bf, cf))


def gauss_log_potential(branch_cap: int = 30) -> PotentialSpec:
    """A(x) = 2 log x = -log|T'| for the Gauss map.

    The Lipschitz bound holds on [1/(branch_cap+1), 1], where all branch
    images live; the two-step contraction of the Gauss branches is below
    the golden mean squared, recorded here as a single-step 0.62.
    """

    def fn(x):
        return 2.0 * np.log(x)

    return PotentialSpec("2*log(x)", fn, holder_constant=2.0 * (branch_cap + 1),
                         contraction=0.62)


def custom_potential(fn: Callable, name: str, holder_constant: float,
                     contraction: float = 0.5) -> PotentialSpec:
    return PotentialSpec(name, fn, holder_constant, contraction)


# The potentials exercised throughout the test-suite presets.
QUAD_DIRAC = polynomial_potential(-1, 2, -1, name="-(x-1)^2")
QUAD_PERIOD2 = polynomial_potential(Fraction(-1, 4), 1, -1, name="-(x-1/2)^2")
QUAD_CONVEX = polynomial_potential(Fraction(1, 4), -1, 1, name="(x-1/2)^2")
LINEAR = polynomial_potential(0, 1, 0, name="x")
GAUSS_LOG = gauss_log_potential()
