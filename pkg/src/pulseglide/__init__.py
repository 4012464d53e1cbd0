"""Pulse-and-glide driving as a periodic optimal-control problem."""

from .vehicle_model import BsfcParams, VehicleParams, equilibrium_for_speed, steady_cost
from .pmp import Weights

__version__ = "0.1.0"
