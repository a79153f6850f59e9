"""Verifiable-reward RL stage machinery at desk scale."""
__version__ = "0.1.0"
