"""Unit test package for ttafft."""
