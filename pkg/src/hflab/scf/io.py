"""JSON and CSV serialization of SCF results."""

from __future__ import annotations

import csv
import io
import json

import numpy as np

from ..errors import ConfigurationError
from ..grid import build_grid
from .atoms import AtomSpec, parse_shells
from .solver import Orbital, SCFResult

FORMAT_VERSION = 1


def result_to_dict(result: SCFResult, include_radial: bool = False) -> dict:
    d = {
        "format_version": FORMAT_VERSION,
        "scheme": result.scheme,
        "atom": result.atom.describe(),
        "grid": result.grid.describe(),
        "total_energy": result.total_energy,
        "kinetic_energy": result.kinetic_energy,
        "potential_energy": result.potential_energy,
        "virial_ratio": result.virial_ratio,
        "iterations": result.iterations,
        "converged": result.converged,
        "energy_trace": [float(e) for e in result.energy_trace],
        "orbitals": [
            {"label": o.label, "n": o.n, "l": o.l, "occupancy": o.occupancy, "energy": o.energy}
            for o in result.orbitals
        ],
    }
    if include_radial:
        for entry, o in zip(d["orbitals"], result.orbitals):
            entry["radial"] = o.radial.tolist()
        d["direct_potential"] = result.direct_potential.tolist()
    return d


def result_to_json(result: SCFResult, include_radial: bool = False) -> str:
    return json.dumps(result_to_dict(result, include_radial), indent=1, sort_keys=True)


def result_from_json(text: str) -> SCFResult:
    """Rebuild an :class:`SCFResult` saved with ``include_radial=True``."""
    d = json.loads(text)
    if "direct_potential" not in d:
        raise ConfigurationError("saved result lacks radial data; save with include_radial=True")
    a = d["atom"]
    atom = AtomSpec(a["Z"], parse_shells(a["shells"]), a.get("name", ""))
    grid = build_grid(**d["grid"])
    orbitals = [Orbital(o["n"], o["l"], o["occupancy"], o["energy"], np.array(o["radial"])) for o in d["orbitals"]]
    U = np.array(d["direct_potential"])
    return SCFResult(
        scheme=d["scheme"], atom=atom, grid=grid, orbitals=orbitals,
        hartree_potential=-atom.Z / grid.points + U, total_energy=d["total_energy"],
        iterations=d["iterations"], converged=d["converged"], energy_trace=d["energy_trace"],
        kinetic_energy=d["kinetic_energy"], direct_potential=U,
    )


def orbital_csv(result: SCFResult, label: str) -> str:
    """Table with header ``r,P`` for one occupied orbital."""
    o = result.orbital(label)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r", "P"])
    for r, p in zip(result.grid.points, o.radial):
        w.writerow([repr(float(r)), repr(float(p))])
    return buf.getvalue()
