"""Frequency-aware GAN toolkit: spectra, symmetry checks, EV-Freq, training, evaluation."""
__version__ = "0.1.0"
