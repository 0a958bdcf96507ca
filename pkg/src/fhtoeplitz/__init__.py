"""Fisher-Hartwig Toeplitz laboratory."""
