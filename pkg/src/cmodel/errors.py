class CModelError(Exception):
    """Base class for domain errors; ``module`` names the originating module."""

    module = "cmodel"
