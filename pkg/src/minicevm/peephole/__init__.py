"""Peephole optimization with checked rewrite rules."""
from .check import CheckResult, check_rule, check_rules, load_rules
from .optimize import OptReport, optimize, optimize_program
from .rules import Rule, parse_rule, parse_rules, read_rules

__all__ = ["CheckResult", "check_rule", "check_rules", "OptReport", "optimize", "optimize_program",
           "Rule", "load_rules", "read_rules", "parse_rule", "parse_rules"]
