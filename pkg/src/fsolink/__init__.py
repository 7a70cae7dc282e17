"""Link-level simulator for free-space optical M-QAM with ML and DNN detection."""

__version__ = "0.1.0"
