"""Structure-guided object removal and scene completion package"""

__version__ = "1.0.0"
