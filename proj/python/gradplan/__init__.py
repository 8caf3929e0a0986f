"""Planning by backpropagation through unrolled domain dynamics."""

from ._core import (
    ConfigError,
    Domain,
    GradplanError,
    IoError,
    NumericalError,
    Optimizer,
    domain_names,
    nav_lambda,
    plan,
    run,
)

__all__ = [
    "ConfigError",
    "Domain",
    "GradplanError",
    "IoError",
    "NumericalError",
    "Optimizer",
    "domain_names",
    "nav_lambda",
    "plan",
    "run",
]
