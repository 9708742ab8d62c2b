"""Synthetic leader/follower motion corpus."""
