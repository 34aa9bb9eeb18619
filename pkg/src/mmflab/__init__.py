"""Modified Mike-Farmer order-driven market model and Hurst-exponent tooling."""

__version__ = "0.1.0"
