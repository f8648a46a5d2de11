"""Resonances of 2x2 self-adjoint operator matrices on neighbouring unphysical sheets."""
