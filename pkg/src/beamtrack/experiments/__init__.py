"""Monte Carlo experiment drivers and result emission."""
