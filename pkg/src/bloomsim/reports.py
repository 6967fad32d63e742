"""Result record for the estimate-verification suites."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field


@dataclass
class EstimateReport:
    """Outcome of one empirical inequality / constant estimation.

    ``empirical_constant`` is the measured sup (or ratio); ``bound`` the
    analytic value it is checked against, None when the estimate only reports
    a constant.  ``worst_witness`` holds the serialized input achieving the
    sup so the number can be re-derived later (see diagnostics.reevaluate).
    """

    name: str
    empirical_constant: float
    bound: float | None
    passed: bool
    trials: int
    worst_witness: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def to_json(self) -> str:
        def _default(o):
            try:
                return o.item()
            except AttributeError:
                return list(o)

        return json.dumps(asdict(self), indent=2, default=_default)

    def summary_line(self) -> str:
        verdict = "pass" if self.passed else "FAIL"
        bound = "-" if self.bound is None else f"{self.bound:.6g}"
        return (
            f"{verdict:4s} {self.name}: empirical={self.empirical_constant:.6g} "
            f"bound={bound} trials={self.trials}"
        )
