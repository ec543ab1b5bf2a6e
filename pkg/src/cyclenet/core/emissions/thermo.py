"""Species set, element matrix and 7-coefficient Gibbs energy fits"""

import csv
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from cyclenet.core.errors import ParseError, SchemaMismatch, VersionMismatch

TABLE_VERSION = 1
DEFAULT_TABLE = Path(__file__).parent / "data" / "thermo.csv"

SPECIES = ("CO2", "H2O", "N2", "O2", "CO", "H2", "OH", "H", "O", "NO")
ELEMENTS = ("C", "H", "O", "N")

# Atoms of each element (columns C, H, O, N) per molecule, rows follow SPECIES
ELEMENT_MATRIX = np.array(
    [
        [1, 0, 2, 0],
        [0, 2, 1, 0],
        [0, 0, 0, 2],
        [0, 0, 2, 0],
        [1, 0, 1, 0],
        [0, 2, 0, 0],
        [0, 1, 1, 0],
        [0, 1, 0, 0],
        [0, 0, 1, 0],
        [0, 0, 1, 1],
    ],
    dtype=float,
)

R_UNIVERSAL = 8.314462618  # J/(mol K)
P_REF = 1.0e5  # Pa

_COLUMNS = ("species", "range", "t_low", "t_high", "a1", "a2", "a3", "a4", "a5", "a6", "a7")


def species_index(name: str) -> int:
    return SPECIES.index(name)


@dataclass(frozen=True)
class NasaFit:
    """Two-range polynomial fit of one species"""

    species: str
    t_mid: float
    low: Tuple[float, ...]
    high: Tuple[float, ...]


class ThermoTable:
    def __init__(self, fits: Dict[str, NasaFit]):
        """Dimensionless Gibbs energies of a set of species

        Args:
            fits:   Fits by species name.
        """
        self.fits = dict(fits)
        self._cache: Dict[Tuple[str, ...], Tuple[np.ndarray, np.ndarray, np.ndarray]] = {}

    def __contains__(self, name: str) -> bool:
        return name in self.fits

    def _arrays(self, names: Tuple[str, ...]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        if names not in self._cache:
            missing = [n for n in names if n not in self.fits]
            if missing:
                raise SchemaMismatch(missing[0], "species missing from thermochemistry table")
            low = np.array([self.fits[n].low for n in names])
            high = np.array([self.fits[n].high for n in names])
            mid = np.array([self.fits[n].t_mid for n in names])
            self._cache[names] = (low, high, mid)
        return self._cache[names]

    def gibbs_rt(self, temp, names: Sequence[str] = SPECIES) -> np.ndarray:
        """g°(T)/(R T) at the 1 bar reference pressure

        Args:
            temp:   Temperatures (K), any shape.
            names:  Species to evaluate.

        Returns:
            Array of shape temp.shape + (len(names),).
        """
        low, high, mid = self._arrays(tuple(names))
        t = np.asarray(temp, dtype=float)[..., None]
        a = np.where((t < mid)[..., None], low, high)
        a1, a2, a3, a4, a5, a6, a7 = (a[..., i] for i in range(7))
        h_rt = a1 + a2 * t / 2 + a3 * t**2 / 3 + a4 * t**3 / 4 + a5 * t**4 / 5 + a6 / t
        s_r = a1 * np.log(t) + a2 * t + a3 * t**2 / 2 + a4 * t**3 / 3 + a5 * t**4 / 4 + a7
        return h_rt - s_r


def read_thermo_table(path: Path) -> ThermoTable:
    """Parse a versioned coefficient table

    Raises:
        VersionMismatch:    Missing or unsupported `# version:` header.
        ParseError:         Malformed row.
    """
    path = Path(path)
    with path.open(newline="") as f:
        lines = f.read().splitlines()

    if not lines or not lines[0].startswith("# version:"):
        raise VersionMismatch(None, TABLE_VERSION)
    found = lines[0].split(":", 1)[1].strip()
    if found != str(TABLE_VERSION):
        raise VersionMismatch(found, TABLE_VERSION)

    body = [(i + 1, line) for i, line in enumerate(lines) if line and not line.startswith("#")]
    if not body:
        raise ParseError("thermochemistry table has no header", line=len(lines))

    header_line, header = body[0]
    reader = csv.reader([header])
    columns = tuple(next(reader))
    if columns != _COLUMNS:
        raise ParseError(f"unexpected header {columns}", line=header_line)

    ranges: Dict[str, Dict[str, Tuple[float, float, Tuple[float, ...]]]] = {}
    for line_no, text in body[1:]:
        row = next(csv.reader([text]))
        if len(row) != len(_COLUMNS):
            raise ParseError(f"expected {len(_COLUMNS)} fields, got {len(row)}", line=line_no)
        try:
            values = [float(v) for v in row[2:]]
        except ValueError:
            raise ParseError("non-numeric coefficient", line=line_no)
        if row[1] not in ("low", "high"):
            raise ParseError(f"unknown range '{row[1]}'", line=line_no, column=2)
        ranges.setdefault(row[0], {})[row[1]] = (values[0], values[1], tuple(values[2:]))

    fits = {}
    for name, parts in ranges.items():
        if set(parts) != {"low", "high"}:
            raise ParseError(f"species {name} needs a low and a high range")
        fits[name] = NasaFit(
            species=name, t_mid=parts["low"][1], low=parts["low"][2], high=parts["high"][2]
        )
    return ThermoTable(fits)


@lru_cache(maxsize=None)
def _default_table() -> ThermoTable:
    return read_thermo_table(DEFAULT_TABLE)


def load_thermo_table(path: Optional[Path] = None) -> ThermoTable:
    """Table shipped with the package, or one read from `path`"""
    if path is None:
        return _default_table()
    return read_thermo_table(path)
