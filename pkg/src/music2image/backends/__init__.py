"""Clients for the four model capabilities, plus offline mock and rule backends."""
