"""Attribute agents, validator, and prompt assembly."""
