"""Test suite for the embedlab package."""
