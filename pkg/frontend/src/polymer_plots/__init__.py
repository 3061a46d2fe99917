"""Batch figure rendering for polymer-lab simulation artifacts.

Reads only the CSV/JSON files emitted by the simulation CLI; never imports
or recomputes simulation logic.
"""

__version__ = "0.1.0"
