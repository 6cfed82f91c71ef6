"""Tests for the embedlab.core module."""
