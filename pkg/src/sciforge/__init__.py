"""sciforge: generate and evaluate scientific diagrams from STEM problems.

Stages: curate -> quiz -> select -> gen-code / gen-pixel -> judge /
validate / metrics / adapt -> report. All model access goes through
pluggable providers; scripted mocks ship in-tree so the whole pipeline
runs deterministically offline.
"""

__version__ = "0.1.0"
