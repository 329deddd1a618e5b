"""Percolation laboratory: anchored isoperimetric profiles, exploration and Wulff crystals."""
