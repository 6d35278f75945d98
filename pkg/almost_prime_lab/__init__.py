"""Desk-scale laboratory for the quaternary inequality |p1^c+p2^c+p3^c+p4^c-N| < vartheta
in primes with p_i + 2 almost prime."""

__version__ = "0.3.0"
TOOL_NAME = "almost-prime-lab"
