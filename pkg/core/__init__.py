"""BesselInvert core engine: pure numerics and I/O, no CLI imports."""
