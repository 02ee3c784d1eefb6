"""Direction-aware collision risk index with a kinematic evaluation harness."""

__version__ = "0.1.0"
