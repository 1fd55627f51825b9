"""Discretization of the coupled fluid and container system."""
