"""Joint time-vertex stationary signal processing."""
