"""Reinforcement learning with policy weights generated by a simulated quantum circuit.

A simulated parameterized quantum circuit plus a small mapping network
generate every weight of a classical policy network; the policy is trained
with REINFORCE and exported as a plain classical model.
"""

__version__ = "0.1.0"
