"""Static-threshold prophet mechanisms on matroids, plus an evaluation harness."""

__version__ = "0.1.0"
