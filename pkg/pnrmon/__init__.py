"""
pnrmon
------

Simulation and estimation of passive photon-number-resolving (PNR)
monitoring of untrusted sources in decoy-state QKD.

Features
--------
- photon-number distributions: thinning, noise convolution and deconvolution
- Alice's optical path and its calibration
- Monte Carlo and expected PNR detector records
- finite-size bounds for noiseless, Poisson-dark and general-noise detectors
- GYS channel observables and three-intensity key rates
- the passive photon-number-analyzer (PNA) scheme for comparison
- the detector-decoy realization of the PNR detector
- configuration-driven experiments writing CSV files and SVG figures
"""

__title__ = "pnrmon"
__author__ = "Wiktor Jaworski"
__license__ = "MIT"
__copyright__ = "Copyright 2023, 2024 Wiktor Jaworski"
__version__ = "1.0.0"

from . import bounds, console, errors, photon_stats, utils
from .bounds import SourceBounds, estimate_bounds, resolution_from_confidence
from .channel import ChannelObservables, GysParameters, simulate_observables
from .keyrate import KeyRateReport, trusted_rate, untrusted_rate
from .photon_stats import NoiseModel, PhotonNumberDistribution, poisson_pnd
