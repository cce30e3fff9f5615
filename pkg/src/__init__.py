"""
TargetMO - preference-targeted Bayesian multi-objective optimization
"""

__version__ = "0.4.0"
