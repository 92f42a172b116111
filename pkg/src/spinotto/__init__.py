"""Four-stroke quantum Otto engine on two coupled spins.

Subpackage map:

* :mod:`spinotto.algebra`   - operator set, Hamiltonian, state <-> b-vector
* :mod:`spinotto.dynamics`  - branch generators and exact propagators
* :mod:`spinotto.thermo`    - powers, heats, entropies, per-cycle balances
* :mod:`spinotto.cycle`     - four-branch cycle assembly and limit cycle
* :mod:`spinotto.noise`     - segment-time noise synthesis and Monte Carlo
* :mod:`spinotto.optimize`  - schedule optimization and sweep protocols
* :mod:`spinotto.cli`       - config parsing, run orchestration, CSV output

Hot numeric kernels are JIT compiled with numba when available; set
``ENGINE_BACKEND=numpy`` to force the pure-numpy fallback.
"""

from .algebra import (
    Hamiltonian,
    OperatorSet,
    b_from_state,
    build_operator_set,
    energy_eigensystem,
    gibbs_b,
    gibbs_state,
    hamiltonian,
    state_from_b,
)
from .cycle import EngineParams, Schedule, limit_cycle, run_cycle
from .dynamics import AdiabatParams, AffineMap, IsochoreParams

__all__ = [
    "AdiabatParams",
    "AffineMap",
    "EngineParams",
    "Hamiltonian",
    "IsochoreParams",
    "OperatorSet",
    "Schedule",
    "b_from_state",
    "build_operator_set",
    "energy_eigensystem",
    "gibbs_b",
    "gibbs_state",
    "hamiltonian",
    "limit_cycle",
    "run_cycle",
    "state_from_b",
]

__version__ = "0.1.0"
