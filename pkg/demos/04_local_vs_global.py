"""Per-site fits versus one global fit.

For a loss that is an average over sites, sub-gaussian parameters fitted
site by site compose as sqrt(sum alpha_i^2)/m.  On symmetric product
instances this matches the parameter fitted on the whole observable.
"""
import math

import numpy as np

from qgen.bounds import Evaluation, certified_alpha, certify, local_fits
from qgen.scenarios.random_instances import random_factorized

for k in range(5):
    inst = random_factorized(np.random.default_rng([4, k]), symmetric=True)
    ev = Evaluation(*inst.triple())
    alphas, _ = local_fits(ev)
    composed = math.sqrt(sum(a * a for a in alphas)) / len(alphas)
    c22 = certify(*inst.triple(), "cor22", evaluation=ev)
    c24 = certify(*inst.triple(), "cor24", evaluation=ev)
    print(f"m={len(alphas)}  global alpha {certified_alpha(ev):.5f}  composed {composed:.5f}  "
          f"bounds {c22.rhs:.4f} / {c24.rhs:.4f}  gen {ev.risk.gen:+.4f}")
