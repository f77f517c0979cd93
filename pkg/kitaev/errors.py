"""Exceptions

Domain failures derive from `KitaevError` and are reported by the command
line with exit code 1. Usage and configuration failures raise `ConfigError`
(or a plain `ValueError` naming the offending parameter) and are reported
with exit code 2.
"""

class KitaevError(Exception):
    """Base class of domain failures"""

class RegimeError(KitaevError):
    """Parameters are in the wrong regime for the requested operation"""

class PrecisionError(KitaevError):
    """Quantity is not resolvable in double precision"""

class ConvergenceError(KitaevError):
    """Eigensolver failed to converge"""

class DefectiveError(KitaevError):
    """Eigenvector basis is (nearly) defective"""

class StabilityError(KitaevError):
    """Integration step fails the stability pre-check"""

class IntegrationError(KitaevError):
    """Integration produced a non-finite state"""

class BoundaryError(KitaevError):
    """Wavepacket weight reached the open boundary"""

class ConfigError(ValueError):
    """Usage or configuration error"""
