"""Base test module."""


class PolarHETest:
    """Base test class for the polarhe package."""

    # tolerance of exact-arithmetic identities
    ATOL = 1e-9
