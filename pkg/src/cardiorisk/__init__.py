"""cardiorisk: ECG features, sampled long-term HRV and survival models."""

__version__ = "0.1.0"
