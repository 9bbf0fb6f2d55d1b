"""Classical stochastic models of a qubit driven by time-correlated noise.

Model 1 (two classical states, noninvasive measurements) and Model 2 (four
states, one bit invasively updated) are simulated by Monte Carlo and checked
against closed-form quantum predictions.  The package also evaluates
Leggett-Garg and CHSH combinations and runs the derived one-bit Bell
protocol, in-process or between networked party processes.
"""

__version__ = "0.1.0"

from qubitsim._core import BACKEND
from qubitsim.analytic import ks_transition_integral, pe, pq, rho_ks
from qubitsim.bell import (
    SharedVariable,
    alice_full,
    alice_reduced,
    bob_full,
    bob_reduced,
    run_protocol,
    shared_variable,
)
from qubitsim.geometry import (
    Rotation,
    SeededRng,
    UnitVec3,
    compose,
    rotate,
    rotation_from_axis_angle,
    sample_uniform_sphere,
    sign,
)
from qubitsim.inequalities import chsh, lg_k3, protocol_chsh, two_time_correlator
from qubitsim.models import (
    QubitClassicalState,
    TransitionConfig,
    measure_update_r,
    model1_prob,
    model1_transition,
    model2_transition,
    simulate_transition,
    trace_trajectory,
)
from qubitsim.noise import NoisePair, NoiseTrace, propagate, sample_noise_pair, trace_projections
from qubitsim.stats import Estimate, binomial_estimate, ks_uniformity, sigma_distance
