"""Tests for the imethod-lab package."""
