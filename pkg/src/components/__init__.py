"""Numerical components: operator tuples, Hardy-space model, colligations, dilations, von Neumann checks."""
