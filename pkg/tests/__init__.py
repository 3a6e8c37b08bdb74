"""Test package for Tello renewal system."""
