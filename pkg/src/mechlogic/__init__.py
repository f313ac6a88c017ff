"""mechlogic - mechanical logic compiler and simulator.

Translates NOR-gate digital logic, from single gates up to an 8-bit
processor, into nonlinear mass-spring-dashpot models and verifies their
behavior by numerical integration against digital golden models.
"""

from . import dynamics

__version__ = "0.1.0"
__all__ = ["dynamics", "gates", "calibrate", "netlist", "circuits", "isa",
           "utm", "memharness", "cli"]
