"""Agent kernel that turns a raw data folder into a trained-model script and predictions."""

__version__ = "0.1.0"
