"""
RIS Network Model (risnet) Package

Physically consistent end-to-end model of a link through a
reconfigurable intelligent surface, built on multiport network theory.
Compares it with the conventional cascaded-channel model.
"""

__version__ = "1.0.0"
__all__ = [
    "multiport",
    "channel",
    "ris",
    "optimizer",
    "analysis",
    "formats",
    "experiments",
    "cli",
    "errors",
    "utils",
]
