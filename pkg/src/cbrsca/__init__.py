"""Channel assignment for shared 3.5 GHz spectrum: conflict graphs and solvers."""

__version__ = "0.1.0"
