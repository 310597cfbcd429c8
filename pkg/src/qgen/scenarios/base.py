"""Common container for a built scenario."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from ..bounds import BoundCertificate, Evaluation, RiskReport, certify
from .config import ScenarioConfig


@dataclass
class Scenario:
    """A built scenario.

    ``ens``, ``lr`` and ``loss`` are the dense pipeline objects (None when the
    sizes only admit a structured evaluator).  ``runner`` overrides the
    default dense evaluation and returns ``(RiskReport, BoundCertificate)``.
    """

    config: ScenarioConfig
    ens: object = None
    lr: object = None
    loss: object = None
    meta: dict = field(default_factory=dict)
    runner: Callable | None = None
    _ev: Evaluation | None = field(default=None, repr=False)

    @property
    def kind(self) -> str:
        return self.config.kind

    @property
    def dense(self) -> bool:
        return self.ens is not None

    def triple(self):
        if not self.dense:
            raise ValueError("scenario was built without a dense pipeline")
        return self.ens, self.lr, self.loss

    def evaluation(self) -> Evaluation:
        if self._ev is None:
            self._ev = Evaluation(self.ens, self.lr, self.loss)
        return self._ev

    def run(self, bound: str = "cor22", **inputs) -> tuple[RiskReport, BoundCertificate]:
        """Risks and one bound certificate."""
        if self.runner is not None:
            return self.runner(bound, **inputs)
        ev = self.evaluation()
        cert = certify(self.ens, self.lr, self.loss, bound, evaluation=ev, **inputs)
        return ev.risk, cert
