"""Disease-specific attention networks (DANet / DANet-h) for ECG arrhythmia detection."""

__version__ = "0.1.0"
