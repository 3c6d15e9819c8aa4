"""Edge-of-chaos analysis of randomly initialized gated recurrent networks."""

__version__ = "0.1.0"
