"""Economic complexity ordinations: CA (ECI/PCI), CCA and biplots."""

__version__ = "0.1.0"
