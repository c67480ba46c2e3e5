"""Physical constants (CODATA-2018) and ion species data.

All values in SI units. Everything downstream imports constants from
here so that a single table fixes the numerical provenance.
"""

from dataclasses import dataclass

CONSTANTS_PROVENANCE = "CODATA-2018"

E_CHARGE = 1.602176634e-19      # elementary charge, C (exact)
EPSILON_0 = 8.8541878128e-12    # vacuum permittivity, F/m
HBAR = 1.054571817e-34          # reduced Planck constant, J s
PLANCK_H = 6.62607015e-34       # Planck constant, J s (exact)
MU_B = 9.2740100783e-24         # Bohr magneton, J/T
MU_N = 5.0507837461e-27         # nuclear magneton, J/T
M_ELECTRON = 9.1093837015e-31   # electron mass, kg
M_PROTON = 1.67262192369e-27    # proton mass, kg
AMU = 1.66053906660e-27         # atomic mass unit, kg

# Coulomb constant times e^2, J m (convenient for chain calculations)
COULOMB_E2 = E_CHARGE**2 / (4.0 * 3.141592653589793 * EPSILON_0)


@dataclass(frozen=True)
class Species:
    """A singly charged ion species with a J=1/2 electronic ground state.

    Attributes
    ----------
    mass : float
        Ion mass in kg.
    g_j : float
        Electronic g-factor (2 for S-state ions).
    g_i : float
        Nuclear g-factor in the mu_I = g_i * I * mu_N convention.
    e_hfs : float
        Zero-field hyperfine splitting between F = I + 1/2 and
        F = I - 1/2 levels, in J.
    i_nuc : float
        Nuclear spin quantum number.
    name : str
        Human-readable label.
    """

    mass: float
    g_j: float
    g_i: float
    e_hfs: float
    i_nuc: float
    name: str = ""

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError(f"ion mass must be positive, got {self.mass}")
        if self.e_hfs < 0:
            raise ValueError(f"hyperfine splitting must be >= 0, got {self.e_hfs}")

    @classmethod
    def from_amu(cls, mass_amu, **kwargs):
        """Build a species from a mass given in atomic mass units."""
        return cls(mass=mass_amu * AMU, **kwargs)


# 171Yb+ ground-state qubit: |S_1/2, F=0> <-> |S_1/2, F=1, m_F=0>,
# hyperfine splitting 12.6428 GHz.  g_j is taken as the free-electron
# value 2 (pure S state); the nuclear term only enters at the 5e-4 level.
def _build_species():
    yb171 = Species.from_amu(
        170.936,
        g_j=2.0,
        g_i=0.98734,
        e_hfs=PLANCK_H * 12.6428121e9,
        i_nuc=0.5,
        name="171Yb+",
    )
    return yb171, {"yb171": yb171}


YB171, SPECIES_REGISTRY = _build_species()

_OVERRIDABLE = {
    "E_CHARGE", "EPSILON_0", "HBAR", "PLANCK_H", "MU_B", "MU_N",
    "M_ELECTRON", "M_PROTON", "AMU", "COULOMB_E2",
}


def apply_overrides(table: dict) -> None:
    """Replace constants from a mapping (testing hook).

    Recognized keys are the module-level constant names plus
    "provenance"; COULOMB_E2 is rederived unless overridden explicitly.
    The species registry is rebuilt against the new values.
    """
    global CONSTANTS_PROVENANCE, COULOMB_E2, YB171, SPECIES_REGISTRY
    unknown = set(table) - _OVERRIDABLE - {"provenance"}
    if unknown:
        raise ValueError(f"unknown constant names: {sorted(unknown)}")
    for name, value in table.items():
        if name == "provenance":
            CONSTANTS_PROVENANCE = str(value)
        else:
            globals()[name] = float(value)
    if "COULOMB_E2" not in table:
        COULOMB_E2 = E_CHARGE**2 / (4.0 * 3.141592653589793 * EPSILON_0)
    YB171, SPECIES_REGISTRY = _build_species()
