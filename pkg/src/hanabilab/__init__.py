"""Belief-graph laboratory for cooperative Hanabi play.

The package bundles a deterministic rules engine, multi-depth belief graphs
with ablation transforms, a forward-simulating shortlist planner, diagnostic
scenario constructors, an agent harness (scripted oracles plus a generic chat
endpoint adapter), experiment runners with line-delimited trial logs, and the
statistics toolkit used to analyze them.
"""

__version__ = "0.1.0"
