from .graph import IndustryGraph, build_graph

__all__ = ["IndustryGraph", "build_graph"]
