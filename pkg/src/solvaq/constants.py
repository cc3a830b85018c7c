"""Physical constants, unit conversions and per-element data."""

BOHR_PER_ANGSTROM = 1.8897259886
HARTREE_TO_KCAL = 627.5095

# Element symbol -> nuclear charge, for the elements this engine supports.
ELEMENT_NUMBERS = {
    "H": 1, "He": 2, "Li": 3, "Be": 4, "B": 5, "C": 6, "N": 7, "O": 8,
    "F": 9, "Ne": 10, "Na": 11, "Mg": 12, "Al": 13, "Si": 14, "P": 15,
    "S": 16, "Cl": 17, "Ar": 18,
}

ELEMENT_SYMBOLS = {z: sym for sym, z in ELEMENT_NUMBERS.items()}

# Bondi van der Waals radii in Angstrom; used to size cavity spheres
# (scaled by CavityConfig.radius_scale).
BONDI_RADII_ANGSTROM = {
    "H": 1.20, "He": 1.40, "Li": 1.82, "Be": 1.53, "B": 1.92, "C": 1.70,
    "N": 1.55, "O": 1.52, "F": 1.47, "Ne": 1.54, "Na": 2.27, "Mg": 1.73,
    "Al": 1.84, "Si": 2.10, "P": 1.80, "S": 1.80, "Cl": 1.75, "Ar": 1.88,
}
