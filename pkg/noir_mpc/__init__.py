"""NOIR MPC - optimal boundary inflow control of signalised urban road networks."""

__version__ = "1.0.0"
