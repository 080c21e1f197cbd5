"""Lattice Monte Carlo: Ising and site-percolation simulations over LCG streams,
plus micro-benchmarks of whole-lattice vector operations."""

__version__ = "0.1.0"
