"""Exception types shared across the package."""


class NumericalFailure(RuntimeError):
    """The interior-point solver could not reach an acceptable certificate."""


class QuotaExceeded(RuntimeError):
    """Dataset generation hit the sampling cap before filling its class quotas."""
