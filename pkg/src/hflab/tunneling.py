"""Static-field ionization estimates with and without the exchange tail.

Everything is evaluated in log10 so that factors like 1e38 or 1e-300 are
handled without overflow.  Conventions: α = sqrt(2 I_i), β = sqrt(2 I_o),
exit points r_i = I_i / E and r_o = I_o / E.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigurationError

_LN10 = np.log(10.0)
# atomic unit of field (E = 1) corresponds to 3.5094e16 W/cm^2
INTENSITY_AU_W_CM2 = 3.50944506e16

ETA_FORMS = ("approximate", "ratio")
TAU_FORMS = ("proportional", "full")


@dataclass(frozen=True)
class TunnelingInput:
    I_i: float
    I_o: float
    E_field: float
    n: int = 1
    n_i: int = 1
    C_n: float = 1.0
    N_o: int = 1

    def __post_init__(self):
        if not (self.I_i > self.I_o > 0.0):
            raise ConfigurationError(f"need I_i > I_o > 0, got I_i={self.I_i}, I_o={self.I_o}")
        if not self.E_field > 0.0:
            raise ConfigurationError("field strength must be positive")
        if not (self.n >= self.n_i >= 1):
            raise ConfigurationError(f"need n >= n_i >= 1, got n={self.n}, n_i={self.n_i}")
        if self.N_o < 1:
            raise ConfigurationError("N_o must be at least 1")

    @property
    def alpha(self) -> float:
        return float(np.sqrt(2.0 * self.I_i))

    @property
    def beta(self) -> float:
        return float(np.sqrt(2.0 * self.I_o))

    @property
    def r_i(self) -> float:
        return self.I_i / self.E_field

    @property
    def r_o(self) -> float:
        return self.I_o / self.E_field


def _log10_abs(x: float) -> float:
    return float(np.log10(abs(x))) if x != 0.0 else float("-inf")


def bare_density(I: float, n_level: int, E_field: float) -> float:
    """log10 of I^{n+½} (I/E)^{2(n−1)} exp(−2 sqrt(2I) I/E)."""
    if I <= 0.0 or E_field <= 0.0:
        raise ConfigurationError("binding energy and field must be positive")
    ln = (n_level + 0.5) * np.log(I) + 2 * (n_level - 1) * np.log(I / E_field) \
        - 2.0 * np.sqrt(2.0 * I) * I / E_field
    return float(ln / _LN10)


@dataclass
class ExchangeDensity:
    log10_value: float
    deep_regime: bool
    log10_first_term: float
    log10_second_term: float


def exchange_density(inp: TunnelingInput) -> ExchangeDensity:
    """Inner density at r_i including the exchange-induced tail.

    The deep-level form β³C²/(αr_i)⁴ (βr_i)^{2n−2} e^{−2βr_i} · N_o² is used
    when the bare term α^{3/2} e^{−αr_i} is smaller than the exchange term;
    otherwise the full squared two-term amplitude is returned and
    ``deep_regime`` is false.
    """
    a, b, r = inp.alpha, inp.beta, inp.r_i
    first = 1.5 * np.log(a) - a * r
    if inp.C_n == 0.0:
        return ExchangeDensity(float("-inf"), False, first / _LN10, float("-inf"))
    second = (np.log(inp.N_o * abs(inp.C_n)) + 1.5 * np.log(b) - 2.0 * np.log(a * r)
              + (inp.n - 1) * np.log(b * r) - b * r)
    deep = second > first
    if deep:
        val = 2.0 * second
    else:
        m = max(first, second)
        amp = np.exp(first - m) - np.sign(inp.C_n) * np.exp(second - m)
        val = 2.0 * (m + np.log(abs(amp))) if amp != 0.0 else float("-inf")
    return ExchangeDensity(float(val / _LN10), bool(deep), float(first / _LN10), float(second / _LN10))


def eta(inp: TunnelingInput, form: str = "approximate") -> float:
    """log10 of the exchange enhancement of inner-level ionization.

    ``approximate``: C² (sqrt(2I_o) I_i/E)^{2(n−n_i)} exp(2 sqrt(2I_i) I_i/E) N_o²;
    ``ratio``: exchange_density − bare_density of the inner level.
    """
    if form == "approximate":
        if inp.C_n == 0.0:
            return float("-inf")
        ln = (2.0 * np.log(abs(inp.C_n) * inp.N_o)
              + 2 * (inp.n - inp.n_i) * np.log(inp.beta * inp.r_i)
              + 2.0 * inp.alpha * inp.r_i)
        return float(ln / _LN10)
    if form == "ratio":
        return exchange_density(inp).log10_value - bare_density(inp.I_i, inp.n_i, inp.E_field)
    raise ConfigurationError(f"unknown eta form {form!r}; expected one of {ETA_FORMS}")


def tau(inp: TunnelingInput, form: str = "proportional") -> float:
    """log10 of the inner/outer ionization ratio.

    ``proportional``: C² N_o² E⁴ exp(−2 sqrt(2I_o) I_i/E) (unit prefactor);
    ``full``: β³C²N_o²/(αr_i)⁴ (βr_i/r_o)^{2n−2} exp(−2β(r_i − r_o)).
    """
    if inp.C_n == 0.0:
        return float("-inf")
    scale = 2.0 * np.log(abs(inp.C_n) * inp.N_o)
    if form == "proportional":
        ln = scale + 4.0 * np.log(inp.E_field) - 2.0 * inp.beta * inp.r_i
    elif form == "full":
        a, b = inp.alpha, inp.beta
        ln = (scale + 3.0 * np.log(b) - 4.0 * np.log(a * inp.r_i)
              + (2 * inp.n - 2) * np.log(b * inp.r_i / inp.r_o) - 2.0 * b * (inp.r_i - inp.r_o))
    else:
        raise ConfigurationError(f"unknown tau form {form!r}; expected one of {TAU_FORMS}")
    return float(ln / _LN10)


@dataclass
class TunnelingReport:
    bare_inner_density: float
    bare_outer_density: float
    exchange_inner_density: float
    eta: float
    tau: float
    deep_regime: bool
    eta_form: str
    tau_form: str
    intensity_w_cm2: float

    def to_dict(self) -> dict:
        return asdict(self)


def report(inp: TunnelingInput, eta_form: str = "approximate", tau_form: str = "proportional") -> TunnelingReport:
    ex = exchange_density(inp)
    return TunnelingReport(
        bare_inner_density=bare_density(inp.I_i, inp.n_i, inp.E_field),
        bare_outer_density=bare_density(inp.I_o, inp.n, inp.E_field),
        exchange_inner_density=ex.log10_value,
        eta=eta(inp, eta_form),
        tau=tau(inp, tau_form),
        deep_regime=ex.deep_regime,
        eta_form=eta_form,
        tau_form=tau_form,
        intensity_w_cm2=INTENSITY_AU_W_CM2 * inp.E_field ** 2,
    )


SWEEP_COLUMNS = ("I_i", "I_o", "E", "n", "n_i", "C_n", "N_o", "log10_eta", "log10_tau")


def sweep(I_i, I_o, fields, n=1, n_i=1, C_n=1.0, N_o=1, eta_form="approximate",
          tau_form="proportional") -> list:
    """Rows of :data:`SWEEP_COLUMNS` over a list of field strengths."""
    rows = []
    for E in fields:
        inp = TunnelingInput(I_i, I_o, float(E), n, n_i, C_n, N_o)
        rows.append((I_i, I_o, float(E), n, n_i, C_n, N_o, eta(inp, eta_form), tau(inp, tau_form)))
    return rows
