"""Set-based reachability verification of robotic contact forces."""

__version__ = "0.1.0"
