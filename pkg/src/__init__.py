"""Circular-node B+-tree on simulated persistent memory."""
