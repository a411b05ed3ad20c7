"""Locally testable codes on left/right Cayley square complexes.

Builds Cayley complexes over explicit expander groups, the square-complex
codes defined on them, their local tester and greedy decoder, and the
spectral / combinatorial oracles that verify every claimed bound on
desk-scale instances.
"""

__version__ = "0.1.0"
