import pytest

from hflab.errors import ConfigurationError
from hflab.scf.atoms import AtomSpec, builtin_atom, load_atom, parse_atom_config, parse_shells


def test_builtin_argon():
    ar = builtin_atom("ar")
    assert ar.Z == 18 and ar.electron_count == 18
    assert [s.label for s in ar.shells] == ["1s", "2s", "2p", "3s", "3p"]
    assert ar.channels == [0, 1]


def test_parse_config(tmp_path):
    text = "# neon\nname = Ne\nZ: 10\nshells = 1s2 2s2 2p6\n"
    atom = parse_atom_config(text)
    assert atom.Z == 10 and atom.name == "Ne"
    f = tmp_path / "ne.cfg"
    f.write_text(text)
    assert load_atom(str(f)).describe() == atom.describe()


@pytest.mark.parametrize("shells", ["1s2 2p3", "1s2 1s2", "1s3", "1s2 3s2", "2x2", "2s2"])
def test_invalid_configurations(shells):
    with pytest.raises(ConfigurationError):
        AtomSpec(10, parse_shells(shells))


def test_single_electron_and_ions_allowed():
    assert AtomSpec(1, parse_shells("1s1")).electron_count == 1
    assert AtomSpec(3, parse_shells("1s2")).electron_count == 2


def test_missing_keys_and_unknown_symbol():
    with pytest.raises(ConfigurationError):
        parse_atom_config("Z = 2")
    with pytest.raises(ConfigurationError):
        builtin_atom("Xx")
