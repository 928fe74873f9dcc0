"""Perspective-taking benchmark for embodied referential communication."""

from .planner import Plan, PlanStats, brute_force_optimal, plan_optimal, plan_stats
from .scenarios import FAMILIES, Family, ScenarioInstance, generate, reference_instance, validate
from .world import Ask, Move, Open, Take, WorldState, apply_action, init_world, render_observation, visible_set

__all__ = [
    "FAMILIES", "Ask", "Family", "Move", "Open", "Plan", "PlanStats", "ScenarioInstance", "Take",
    "WorldState", "apply_action", "brute_force_optimal", "generate", "init_world", "plan_optimal",
    "plan_stats", "reference_instance", "render_observation", "validate", "visible_set",
]
