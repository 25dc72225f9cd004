"""Regret-controlled robust decisions across uncertainty-set sizes."""
