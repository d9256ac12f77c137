class WsnAggError(Exception):
    """Base class for all errors raised by wsnagg."""


class InvalidPointError(WsnAggError, ValueError):
    pass


class InvalidCurveError(WsnAggError, ValueError):
    pass


class ScalarRangeError(WsnAggError, ValueError):
    pass


class UnmappablePointError(WsnAggError):
    """No plaintext within the permitted range maps to the given point."""


class CorruptCiphertextError(UnmappablePointError):
    pass


class InvalidEphemeralError(WsnAggError, ValueError):
    pass


class InvalidKeyError(WsnAggError, ValueError):
    pass


class EnergyDomainError(WsnAggError, ValueError):
    pass


class EmptyNetworkError(WsnAggError, ValueError):
    pass


class InvalidClusterCountError(WsnAggError, ValueError):
    pass


class DeadClusterError(WsnAggError):
    pass


class NetworkDeadError(WsnAggError):
    """No cluster agent is left alive; the simulation cannot continue."""


class ReportRejectedError(WsnAggError):
    def __init__(self, reason, cluster_id=None):
        super().__init__(f"aggregate report rejected ({reason})")
        self.reason = reason
        self.cluster_id = cluster_id


class ConfigError(WsnAggError, ValueError):
    pass
