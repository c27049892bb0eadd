"""CPS security-assessment workbench.

Reconstructs system architecture narrations, derives STRIDE-LM threat
models and attack trees, quantifies risk with an exact Bayesian network,
and exchanges models as AutomationML.
"""

__version__ = "0.1.0"
