"""Four-parameter stationary covariance family of 2D linear stochastic systems."""

__version__ = "0.1.0"
