"""Numerics for sharp fractional inequalities on H-type groups."""
