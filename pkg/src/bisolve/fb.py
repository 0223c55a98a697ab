"""Fischer-Burmeister complementarity machinery.

The scalar function ``fb(a, b) = sqrt(a^2 + b^2) - a - b`` vanishes exactly
when ``a >= 0``, ``b >= 0`` and ``a * b = 0``, which lets a complementarity
system be written as a square (semismooth) equation. The derivative elements
returned here are the generalized-derivative choice used by the Newton
solver, including the standard limiting element at the kink ``(0, 0)``.
"""

from dataclasses import dataclass

import numpy as np

# Below this radius the pair counts as the degenerate kink (0, 0).
_DEGENERATE_RADIUS = 1e-14
# Limiting derivative along the direction (1, 1): 1/sqrt(2) - 1.
_KINK_ELEMENT = 1.0 / np.sqrt(2.0) - 1.0


def fb(a, b):
    """Elementwise Fischer-Burmeister value ``sqrt(a^2+b^2) - a - b``.

    Uses ``hypot`` so that large inputs do not overflow in the square.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.hypot(a, b) - a - b


@dataclass(frozen=True)
class FbPairDerivative:
    """Partial derivatives of ``fb`` w.r.t. its two arguments, elementwise."""

    d_a: np.ndarray
    d_b: np.ndarray


def fb_derivative_element(a, b):
    """Generalized-derivative element of ``fb`` at ``(a, b)``, elementwise.

    Away from the origin this is the classical gradient
    ``(a/r - 1, b/r - 1)`` with ``r = sqrt(a^2+b^2)``. Within radius 1e-14 of
    the origin it is the limit along the diagonal direction ``(1, 1)``, i.e.
    both partials equal ``1/sqrt(2) - 1``. Every returned pair satisfies
    ``(d_a + 1)^2 + (d_b + 1)^2 <= 1`` up to roundoff.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    r = np.hypot(a, b)
    degenerate = r < _DEGENERATE_RADIUS
    safe_r = np.where(degenerate, 1.0, r)
    d_a = np.where(degenerate, _KINK_ELEMENT, a / safe_r - 1.0)
    d_b = np.where(degenerate, _KINK_ELEMENT, b / safe_r - 1.0)
    return FbPairDerivative(d_a=d_a, d_b=d_b)


def fb_block(constraint_values, multipliers):
    """Residual block ``fb(-c, mult)`` together with its derivative element.

    This is the standard encoding of ``c <= 0, mult >= 0, mult' c = 0``:
    the block is zero exactly at complementary feasible pairs. Returns
    ``(values, FbPairDerivative)`` where the derivative is taken w.r.t.
    ``(-c, mult)``; the chain rule for a row ``fb(-c_j, mult_j)`` is
    ``d/d(vars) = -d_a * grad c_j`` and ``d/d(mult_j) = d_b``.
    """
    c = np.atleast_1d(np.asarray(constraint_values, dtype=float))
    mult = np.atleast_1d(np.asarray(multipliers, dtype=float))
    if c.shape != mult.shape:
        raise ValueError(
            f"constraint/multiplier length mismatch: {c.shape} vs {mult.shape}"
        )
    return fb(-c, mult), fb_derivative_element(-c, mult)
