"""Steady-state EPR steering between two oscillators driven in cascade by one light field."""

from .model import CascadeConfig, ChannelParams, OscillatorParams, derived_rates, directional_coupling, validate
from .steady_state import SteadyStateMoments, rwa_moments
from .steering import Steering, SteeringReport, classify, steering_from_covariance, steering_parameters

__all__ = [
    "CascadeConfig",
    "ChannelParams",
    "OscillatorParams",
    "SteadyStateMoments",
    "Steering",
    "SteeringReport",
    "classify",
    "derived_rates",
    "directional_coupling",
    "rwa_moments",
    "steering_from_covariance",
    "steering_parameters",
    "validate",
]
