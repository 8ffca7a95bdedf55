"""Ion-cavity and optomechanical-cavity arms, beam-splitter post-selection, and analysis of the ion-vibration/mirror states it produces."""

__version__ = "0.1.0"
