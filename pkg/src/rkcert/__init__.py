"""Exact A- and A(alpha)-stability certificates for Runge-Kutta tableaus."""
__version__ = "0.1.0"
