"""Atom specifications: shell strings, key-value config files, builtin table."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from ..errors import ConfigurationError

L_LETTERS = "spdfghik"

_SHELL_RE = re.compile(r"^(\d+)([a-z])(\d+)$")

BUILTIN = {
    "H": (1, "1s1"),
    "He": (2, "1s2"),
    "Be": (4, "1s2 2s2"),
    "Ne": (10, "1s2 2s2 2p6"),
    "Mg": (12, "1s2 2s2 2p6 3s2"),
    "Ar": (18, "1s2 2s2 2p6 3s2 3p6"),
    "Ca": (20, "1s2 2s2 2p6 3s2 3p6 4s2"),
    "Kr": (36, "1s2 2s2 2p6 3s2 3p6 3d10 4s2 4p6"),
}


@dataclass(frozen=True)
class Shell:
    n: int
    l: int
    occupancy: int

    @property
    def label(self) -> str:
        return f"{self.n}{L_LETTERS[self.l]}"

    @property
    def capacity(self) -> int:
        return 2 * (2 * self.l + 1)


@dataclass(frozen=True)
class AtomSpec:
    """Nuclear charge plus a list of closed shells.

    A single electron in total (H, He+, ...) is also accepted; every other
    configuration must consist of completely filled shells.
    """

    Z: int
    shells: tuple
    name: str = ""

    def __post_init__(self):
        if int(self.Z) != self.Z or self.Z < 1:
            raise ConfigurationError(f"nuclear charge must be a positive integer, got {self.Z}")
        shells = tuple(s if isinstance(s, Shell) else Shell(*s) for s in self.shells)
        object.__setattr__(self, "shells", shells)
        if not shells:
            raise ConfigurationError("atom has no occupied shells")
        seen = set()
        for s in shells:
            if not (s.n > s.l >= 0):
                raise ConfigurationError(f"invalid quantum numbers n={s.n}, l={s.l}")
            if (s.n, s.l) in seen:
                raise ConfigurationError(f"shell {s.label} listed twice")
            seen.add((s.n, s.l))
            if not (0 < s.occupancy <= s.capacity):
                raise ConfigurationError(f"occupancy {s.occupancy} invalid for shell {s.label}")
        if self.electron_count > 1:
            open_ = [s.label for s in shells if s.occupancy != s.capacity]
            if open_:
                raise ConfigurationError(
                    "only closed-shell configurations are supported; open: " + ", ".join(open_))
        ls = {}
        for s in shells:
            ls.setdefault(s.l, []).append(s.n)
        for l, ns in ls.items():
            if sorted(ns) != list(range(l + 1, l + 1 + len(ns))):
                raise ConfigurationError(
                    f"shells of l={l} must fill from n={l + 1} without gaps: {sorted(ns)}")

    @property
    def electron_count(self) -> int:
        return sum(s.occupancy for s in self.shells)

    @property
    def channels(self) -> list:
        return sorted({s.l for s in self.shells})

    def shell(self, label: str) -> Shell:
        for s in self.shells:
            if s.label == label:
                return s
        raise ConfigurationError(f"shell {label} not occupied in {self.name or self.Z}")

    def describe(self) -> dict:
        return {"name": self.name, "Z": self.Z,
                "shells": " ".join(f"{s.label}{s.occupancy}" for s in self.shells)}


def parse_shells(text: str) -> tuple:
    """Parse ``"1s2 2s2 2p6"`` into a tuple of :class:`Shell`."""
    out = []
    for tok in text.replace(",", " ").split():
        m = _SHELL_RE.match(tok.strip().lower())
        if not m or m.group(2) not in L_LETTERS:
            raise ConfigurationError(f"cannot parse shell token {tok!r}")
        out.append(Shell(int(m.group(1)), L_LETTERS.index(m.group(2)), int(m.group(3))))
    return tuple(out)


def builtin_atom(symbol: str) -> AtomSpec:
    key = symbol.strip()
    key = key[:1].upper() + key[1:].lower()
    if key not in BUILTIN:
        raise ConfigurationError(f"unknown atom {symbol!r}; builtin: {', '.join(BUILTIN)}")
    Z, shells = BUILTIN[key]
    return AtomSpec(Z, parse_shells(shells), name=key)


def parse_atom_config(text: str) -> AtomSpec:
    """Parse a key-value atom description.

    Recognised keys are ``Z``, ``shells`` and optionally ``name``; ``#``
    starts a comment.  Example::

        name = Ar
        Z = 18
        shells = 1s2 2s2 2p6 3s2 3p6
    """
    fields = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, val = line.split("=", 1)
        elif ":" in line:
            key, val = line.split(":", 1)
        else:
            raise ConfigurationError(f"line {lineno}: expected key = value")
        fields[key.strip().lower()] = val.strip()
    if "z" not in fields or "shells" not in fields:
        raise ConfigurationError("atom config needs both Z and shells")
    try:
        Z = int(fields["z"])
    except ValueError as exc:
        raise ConfigurationError(f"Z must be an integer, got {fields['z']!r}") from exc
    return AtomSpec(Z, parse_shells(fields["shells"]), name=fields.get("name", ""))


def load_atom(source: str) -> AtomSpec:
    """Builtin symbol, or path to a key-value config file."""
    p = Path(source)
    if p.is_file():
        return parse_atom_config(p.read_text())
    return builtin_atom(source)
