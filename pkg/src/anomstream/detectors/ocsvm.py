"""Linear one-class SVM trained by per-event stochastic gradient descent.

Model is a halfspace w·x >= rho; score is rho - w·x, positive outside the
halfspace. Updates follow the standard single-sample gradient of

    nu/2 ||w||^2 - nu rho + max(0, rho - w·x)

with inverse-scaling step size lr / t^0.25, so about a nu-fraction of the
stream ends up on the active side of the hinge. Deterministic: no
randomness, seeds only affect nothing here.
"""

from __future__ import annotations

import numpy as np

from .._backend import jit, pick
from ..core import Detector
from ..params import OCSVMParams, validate

POWER_T = 0.25


def _sgd_step_loop(w, x, rho, nu, eta):
    dot = 0.0
    for j in range(w.shape[0]):
        dot += w[j] * x[j]
    active = 1.0 if rho - dot > 0.0 else 0.0
    decay = 1.0 - eta * nu
    for j in range(w.shape[0]):
        w[j] = w[j] * decay + eta * active * x[j]
    return rho + eta * nu - eta * active


_sgd_step_jit = jit(_sgd_step_loop)


def _sgd_step_py(w, x, rho, nu, eta):
    dot = float(np.dot(w, x))
    active = 1.0 if rho - dot > 0.0 else 0.0
    w *= 1.0 - eta * nu
    if active:
        w += eta * x
    return rho + eta * nu - eta * active


sgd_step = pick(_sgd_step_jit, _sgd_step_py)


class OCSVM(Detector):
    kind = "OCSVM"

    def __init__(self, params: OCSVMParams = None, seed: int = 0):
        super().__init__(seed)
        self.params = params or OCSVMParams()
        validate(self.kind, self.params)
        self._w = None
        self._rho = 0.0

    def _ensure(self, d: int):
        if self._w is None:
            self._w = np.zeros(d, dtype=np.float64)

    def _score(self, x):
        self._ensure(x.shape[0])
        return self._rho - float(np.dot(self._w, x))

    def _learn(self, x):
        self._ensure(x.shape[0])
        t = self.n_seen + 1
        eta = self.params.learning_rate / t**POWER_T
        self._rho = float(sgd_step(self._w, x, self._rho, self.params.nu, eta))
