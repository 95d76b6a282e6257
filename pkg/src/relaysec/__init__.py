"""Partial-secrecy analysis of an untrusted amplify-and-forward relay with
destination-based jamming: closed forms, Monte Carlo and power allocation."""

from .channel import ChannelRealization, SystemParams
from .montecarlo import McConfig, McReport, simulate
from .optimizer import OptProblem, OptResult, PsoConfig, solve

__all__ = ["ChannelRealization", "SystemParams", "McConfig", "McReport", "simulate",
           "OptProblem", "OptResult", "PsoConfig", "solve"]
