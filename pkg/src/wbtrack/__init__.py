"""Whole-body motion tracking for simulated humanoids.

Pipeline: curated motion datasets -> privileged-teacher PPO -> DAgger
distillation to a history-conditioned student -> CVAE motion synthesis ->
tracking evaluation and ablation reports.
"""

__version__ = "0.1.0"
