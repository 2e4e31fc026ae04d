"""Activity recognition for instrumented rollating walkers.

HMM (supervised counting, EM, collapsed Gibbs) and linear-chain CRF models
over load-cell / accelerometer / wheel-encoder streams, with the feature
pipeline, windowed evaluation and a seeded synthetic course simulator.
"""

__version__ = "0.1.0"
