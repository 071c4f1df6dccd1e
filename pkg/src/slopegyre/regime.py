"""Parameter hypotheses, derived physical coefficients and frequency regimes."""
import enum
import math
import warnings
from dataclasses import dataclass, asdict


class RegimeViolation(ValueError):
    def __init__(self, name, detail=""):
        super().__init__(name if not detail else f"{name}: {detail}")
        self.name = name


class RelaxedBoundWarning(UserWarning):
    pass


class FrequencyRegime(enum.Enum):
    LowFreq = "LowFreq"
    MidFreq = "MidFreq"
    OutOfRange = "OutOfRange"


@dataclass(frozen=True)
class Parameters:
    epsilon: float
    a: float
    b: float
    d: float
    e: float
    alpha: float
    M: int = 2
    theta_lo: float = 1.0
    theta_hi: float = 0.1
    relaxed_b: bool = False

    def with_epsilon(self, eps):
        return Parameters(**{**asdict(self), "epsilon": eps})

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class DerivedScales:
    epsilon: float
    beta: float
    omega: float
    nu_h: float
    nu_3: float
    delta: float
    alpha: float
    theta_lo: float = 1.0
    theta_hi: float = 0.1
    M: int = 2

    @classmethod
    def from_raw(cls, epsilon, beta, omega, nu_h, nu_3, alpha, delta=None, M=2,
                 theta_lo=1.0, theta_hi=0.1):
        """Scales from raw coefficients, bypassing the exponent hypotheses."""
        if delta is None:
            delta = epsilon ** (M / 2)
        return cls(epsilon, beta, omega, nu_h, nu_3, delta, alpha, theta_lo, theta_hi, M)

    def replace(self, **kw):
        d = asdict(self)
        d.update(kw)
        return DerivedScales(**d)

    @property
    def s(self):
        return math.sin(self.alpha)

    @property
    def c(self):
        return math.cos(self.alpha)

    @property
    def nu_eff(self):
        return self.nu_h * self.s ** 2 + self.nu_3 * self.c ** 2

    @property
    def munk_scale(self):
        return (self.beta / self.nu_eff) ** (1 / 3)

    @property
    def ekman_scale(self):
        if self.omega == 0:
            return math.inf
        return abs(math.tan(self.alpha)) / (math.sqrt(self.nu_eff) * self.epsilon * math.sqrt(abs(self.omega)))

    @property
    def low_threshold(self):
        return self.beta ** (2 / 3) * self.nu_eff ** (1 / 3)

    @property
    def high_threshold(self):
        return self.beta ** 0.75 * self.nu_eff ** 0.25

    def as_dict(self):
        d = asdict(self)
        d.update(s=self.s, c=self.c, nu_eff=self.nu_eff, munk_scale=self.munk_scale,
                 ekman_scale=self.ekman_scale)
        return d


def validate(params: Parameters) -> DerivedScales:
    p = params
    if not p.epsilon > 0:
        raise RegimeViolation("epsilon>0", f"epsilon={p.epsilon}")
    if not p.a > 0:
        raise RegimeViolation("0<a", f"a={p.a}")
    if not p.a < 1:
        raise RegimeViolation("a<1", f"a={p.a}")
    if not p.d >= 0:
        raise RegimeViolation("d≥0", f"d={p.d}")
    if not p.e >= p.d:
        raise RegimeViolation("e≥d", f"e={p.e}, d={p.d}")
    bound = (2 * p.a - p.d) / 3
    if p.relaxed_b:
        relaxed = (3 * p.a - p.d) / 4
        if p.b > bound:
            warnings.warn(f"b={p.b} exceeds (2a−d)/3={bound:.4g}; accepted under the relaxed bound",
                          RelaxedBoundWarning, stacklevel=2)
        if not p.b <= relaxed + 1e-14:
            raise RegimeViolation("b ≤ (3a−d)/4", f"b={p.b}, bound={relaxed}")
    elif not p.b <= bound + 1e-14:
        raise RegimeViolation("b ≤ (2a−d)/3", f"b={p.b}, bound={bound}")
    if not (-math.pi / 2 < p.alpha < math.pi / 2):
        raise RegimeViolation("|alpha|<π/2", f"alpha={p.alpha}")
    if abs(math.sin(p.alpha)) < 1e-12:
        raise RegimeViolation("sin(alpha)≠0")
    if abs(math.cos(p.alpha)) < 1e-12:
        raise RegimeViolation("cos(alpha)≠0")
    if not (isinstance(p.M, int) and p.M > 0):
        raise RegimeViolation("M>0", f"M={p.M}")
    eps = p.epsilon
    return DerivedScales(
        epsilon=eps, beta=eps ** -p.a, omega=eps ** -p.b, nu_h=eps ** p.d, nu_3=eps ** p.e,
        delta=eps ** (p.M / 2), alpha=p.alpha, theta_lo=p.theta_lo, theta_hi=p.theta_hi, M=p.M)


def classify_frequency(scales: DerivedScales, theta_lo=None, theta_hi=None) -> FrequencyRegime:
    tl = scales.theta_lo if theta_lo is None else theta_lo
    th = scales.theta_hi if theta_hi is None else theta_hi
    w = abs(scales.omega)
    if w <= tl * scales.low_threshold:
        return FrequencyRegime.LowFreq
    if w <= th * scales.high_threshold:
        return FrequencyRegime.MidFreq
    return FrequencyRegime.OutOfRange


# presets (our own choices, see README)

def preset(name, epsilon=None):
    """Named parameter sets used by tests, scripts and the CLI."""
    q = -math.pi / 4
    table = {
        "reference": Parameters(1e-2, 0.5, 0.0, 1.0, 2.0, q),
        "lowfreq": Parameters(1e-3, 0.5, -0.5, 1.0, 2.0, q),
        "midfreq": Parameters(1e-2, 0.5, 0.0, 1.0, 2.0, q, theta_hi=1.0),
    }
    if name == "ekman":
        return DerivedScales.from_raw(1e-2, 10.0, 1.0, 1e-4, 1e-4, q)
    p = table[name]
    if epsilon is not None:
        p = p.with_epsilon(epsilon)
    return p


def from_section(section) -> Parameters:
    """Build Parameters from a flat key/value mapping (config section "regime")."""
    g = section.get
    return Parameters(
        epsilon=float(g("epsilon", 1e-2)), a=float(g("a", 0.5)), b=float(g("b", 0.0)),
        d=float(g("d", 1.0)), e=float(g("e", 2.0)),
        alpha=math.radians(float(g("alpha_degrees", -45.0))), M=int(g("M", 2)),
        theta_lo=float(g("theta_lo", 1.0)), theta_hi=float(g("theta_hi", 0.1)),
        relaxed_b=str(g("relaxed_b", "false")).lower() in ("1", "true", "yes"))
