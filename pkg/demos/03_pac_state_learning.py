"""Learning an unknown qubit state from measurement statistics.

Hypotheses are 64 qubit states on two Fibonacci shells.  The learner builds
an eps-net from m unlabeled effects, estimates m training outcomes from
m_train copies each, and returns the empirical risk minimizer on the net.
Excess risk shrinks along every size axis and settles below eps.
"""
from qgen.scenarios import ScenarioConfig
from qgen.scenarios.pac import PacModel, estimate_montecarlo

base = dict(eps=0.1, seed=11, hypotheses={"family": "fibonacci", "count": 32},
            distribution={"n_effects": 16, "rho0": [0.3, 0.2, 0.6]})

for axis in ("m", "m_train", "m_test"):
    print(f"varying {axis} (others fixed at 16)")
    for v in (4, 16, 64):
        sizes = dict(m=16, m_train=16, m_test=16)
        sizes[axis] = v
        est = estimate_montecarlo(PacModel(ScenarioConfig("pacStateLearning", **sizes, **base)), samples=1000)
        print(f"  {v:>3}: excess {est.excess:.4f} +- {est.excess_se:.4f}   "
              f"log|net| {est.log_net:.2f}   gen {est.gen:+.4f}")
print("m_test only changes how the learner is scored, never which state it picks")
