"""Fixed-point money: integer cents everywhere, 2-decimal strings at the edges."""

import math
from fractions import Fraction

from .errors import ValidationError


def to_cents(value) -> int:
    """Parse a money amount (number or string) into integer cents.

    Rejects non-finite values and anything finer than 2 decimal places.
    """
    if isinstance(value, bool):
        raise ValidationError(f"not a money amount: {value!r}")
    if isinstance(value, int):
        return value * 100
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValidationError(f"money amount must be finite, got {value!r}")
        cents = round(value * 100)
        if abs(value * 100 - cents) > 1e-6:
            raise ValidationError(f"money amount has more than 2 decimals: {value!r}")
        return cents
    if isinstance(value, str):
        try:
            frac = Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"not a money amount: {value!r}") from exc
        cents = frac * 100
        if cents.denominator != 1:
            raise ValidationError(f"money amount has more than 2 decimals: {value!r}")
        return int(cents)
    raise ValidationError(f"not a money amount: {value!r}")


def fmt(cents: int) -> str:
    """Render cents as the shortest exact decimal string ('84.75', '26.1', '5')."""
    sign = "-" if cents < 0 else ""
    units, rem = divmod(abs(cents), 100)
    if rem == 0:
        return f"{sign}{units}"
    text = f"{sign}{units}.{rem:02d}"
    return text.rstrip("0")


def to_float(cents: int) -> float:
    return cents / 100


def scale(cents: int, factor: Fraction) -> int:
    """Multiply cents by an exact rational factor, rounding half up to the cent."""
    product = Fraction(cents) * factor
    floor = product.numerator // product.denominator
    remainder = product - floor
    return int(floor + (1 if remainder * 2 >= 1 else 0))
