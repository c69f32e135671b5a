"""
Records for checked inequalities
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Union

from utils.errors import BoundViolationError
from utils.interval_utils import MeasuredValue, format_upper, mpf_to_fraction

logger = logging.getLogger(__name__)

Bound = Union[int, Fraction]


@dataclass(frozen=True)
class BoundCheck:
    """
    One certified comparison ``observed < bound`` (or ``<=`` when ``strict`` is False)

    ``holds`` is True only when the whole enclosure of the observed value is on
    the right side of the bound; an enclosure straddling the bound counts as a
    failure.
    """

    name: str
    observed: MeasuredValue
    bound: Bound
    strict: bool = True
    params: Dict[str, Any] = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        top = mpf_to_fraction(self.observed.hi)
        if self.strict:
            return top < Fraction(self.bound)
        return top <= Fraction(self.bound)

    @property
    def relation(self) -> str:
        return "<" if self.strict else "<="

    def to_row(self) -> Dict[str, Any]:
        return {
            "check": self.name,
            "observed_hi": format_upper(self.observed.hi),
            "relation": self.relation,
            "bound": str(self.bound),
            "holds": self.holds,
            "params": dict(self.params),
        }

    def raise_if_violated(self) -> "BoundCheck":
        if not self.holds:
            message = f"{self.name}: observed {self.observed} is not {self.relation} {self.bound}"
            logger.error("%s (params %s)", message, self.params)
            raise BoundViolationError(message, replay={"check": self.name, **self.params})
        return self


def below(name: str, observed: MeasuredValue, bound: Bound, **params) -> BoundCheck:
    return BoundCheck(name=name, observed=observed, bound=bound, strict=True, params=params)


def at_most(name: str, observed: MeasuredValue, bound: Bound, **params) -> BoundCheck:
    return BoundCheck(name=name, observed=observed, bound=bound, strict=False, params=params)


def violations(checks: Iterable[BoundCheck]) -> List[BoundCheck]:
    return [check for check in checks if not check.holds]
