"""qdpb: quality-diversity and evolutionary search on pseudo-Boolean subset problems.

The package pairs an illumination algorithm (MAP-Elites over a one-dimensional
behaviour grid) with a classic (mu+1) evolutionary baseline and the analysis
tools needed to compare them on coverage-maximization and weighted set-cover
instances, including adversarial families built around hard local optima.
"""

__version__ = "0.1.0"
