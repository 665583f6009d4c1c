"""Time-frequency consistency toolkit."""
