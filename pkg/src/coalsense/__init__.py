"""Simulator for cooperative spectrum sensing and access games.

Secondary users sense licensed channels, form coalitions to sense in
parallel, and split transmit power over the spectrum holes they find;
coalition formation runs a switch-based hedonic process whose payoffs
depend on the whole network partition through interference.
"""

__version__ = "0.1.0"
