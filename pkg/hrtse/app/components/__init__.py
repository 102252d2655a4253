"""Reusable UI components for the HR-TSE run browser."""
